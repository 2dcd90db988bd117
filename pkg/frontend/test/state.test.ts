import { describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { ChatController, deriveViewState } from "../src/state.js";
import { SessionView } from "../src/types.js";

function view(overrides: Partial<SessionView> = {}): SessionView {
  return {
    session_id: "s1",
    status: "AWAITING_ANSWER",
    decision: null,
    pending_question: "Are you an employee?",
    history: [],
    asked_questions: ["Are you an employee?"],
    turn_cap: 8,
    turns_taken: 0,
    hypotheses: ["head:", "you are an employee"],
    attention: [0.25, 0.75],
    alignment: [[1.0], [1.0]],
    probabilities: [0.1, 0.2, 0.3, 0.4],
    ...overrides,
  };
}

function jsonResponse(body: unknown, status = 200): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "Content-Type": "application/json" },
  });
}

describe("deriveViewState", () => {
  it("transcript is history order plus the pending question", () => {
    const state = deriveViewState(
      view({
        history: [
          { follow_up_question: "Q1?", follow_up_answer: "YES" },
          { follow_up_question: "Q2?", follow_up_answer: "NO" },
        ],
        pending_question: "Q3?",
      }),
    );
    expect(state.transcript).toEqual([
      { role: "agent", text: "Q1?" },
      { role: "human", text: "Yes" },
      { role: "agent", text: "Q2?" },
      { role: "human", text: "No" },
      { role: "agent", text: "Q3?" },
    ]);
  });

  it("closed sessions disable buttons and show the badge", () => {
    const state = deriveViewState(
      view({ status: "CLOSED", decision: "NO", pending_question: null }),
    );
    expect(state.buttonsEnabled).toBe(false);
    expect(state.decisionBadge).toBe("NO");
  });

  it("in-flight disables buttons even while awaiting", () => {
    expect(deriveViewState(view(), true).buttonsEnabled).toBe(false);
  });

  it("null view renders the empty form state", () => {
    const state = deriveViewState(null);
    expect(state.started).toBe(false);
    expect(state.transcript).toEqual([]);
    expect(state.heat).toEqual([]);
  });
});

describe("ChatController", () => {
  it("double-click while in flight sends a single request", async () => {
    let requests = 0;
    let release!: (value: Response) => void;
    const gate = new Promise<Response>((resolve) => {
      release = resolve;
    });
    const client = new ApiClient("", async (input, init) => {
      requests += 1;
      if (requests === 1) {
        return gate; // keep the first request hanging
      }
      return jsonResponse(view());
    });
    const controller = new ChatController(client);
    const first = controller.start("Doc.", "Q?");
    const second = controller.start("Doc.", "Q?"); // ignored: in flight
    release(jsonResponse(view()));
    await Promise.all([first, second]);
    expect(requests).toBe(1);
  });

  it("network failure shows a banner and keeps the transcript", async () => {
    let calls = 0;
    const client = new ApiClient("", async () => {
      calls += 1;
      if (calls === 1) {
        return jsonResponse(view());
      }
      throw new Error("network down");
    });
    const controller = new ChatController(client);
    const started = await controller.start("Doc.", "Q?");
    expect(started.transcript).toHaveLength(1);
    const failed = await controller.answer("YES");
    expect(failed.errorBanner).toContain("network down");
    expect(failed.transcript).toEqual(started.transcript);
  });

  it("conflict on answer refreshes the session from GET", async () => {
    const closed = view({
      status: "CLOSED",
      decision: "YES",
      pending_question: null,
      history: [{ follow_up_question: "Are you an employee?", follow_up_answer: "YES" }],
      turns_taken: 1,
    });
    const calls: string[] = [];
    const client = new ApiClient("", async (input, init) => {
      calls.push(`${init?.method ?? "GET"} ${input}`);
      if (calls.length === 1) {
        return jsonResponse(view());
      }
      if (init?.method === "POST") {
        return jsonResponse({ detail: "session is closed" }, 409);
      }
      return jsonResponse(closed);
    });
    const controller = new ChatController(client);
    await controller.start("Doc.", "Q?");
    const state = await controller.answer("YES");
    expect(calls).toEqual([
      "POST /sessions",
      "POST /sessions/s1/answer",
      "GET /sessions/s1",
    ]);
    expect(state.decisionBadge).toBe("YES");
    expect(state.errorBanner).toBeNull();
  });

  it("answering a closed session is a no-op client-side", async () => {
    let requests = 0;
    const client = new ApiClient("", async () => {
      requests += 1;
      return jsonResponse(view({ status: "CLOSED", decision: "NO",
                                 pending_question: null }));
    });
    const controller = new ChatController(client);
    await controller.start("Doc.", "Q?");
    await controller.answer("YES");
    expect(requests).toBe(1); // only the start call went out
  });
});
