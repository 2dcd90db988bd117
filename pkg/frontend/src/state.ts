import { ApiClient, ApiError } from "./api.js";
import { UnitHeat, unitHeat } from "./heat.js";
import { Answer, SessionView } from "./types.js";

export interface TranscriptEntry {
  role: "agent" | "human";
  text: string;
}

/** Everything the page renders; a pure function of the last server view
 * plus the in-flight flag and error banner.  No client-side decisions. */
export interface ViewState {
  started: boolean;
  transcript: TranscriptEntry[];
  buttonsEnabled: boolean;
  decisionBadge: string | null;
  errorBanner: string | null;
  heat: UnitHeat[];
}

export function deriveViewState(
  view: SessionView | null,
  inFlight = false,
  errorBanner: string | null = null,
): ViewState {
  if (view === null) {
    return {
      started: false,
      transcript: [],
      buttonsEnabled: false,
      decisionBadge: null,
      errorBanner,
      heat: [],
    };
  }
  const transcript: TranscriptEntry[] = [];
  for (const turn of view.history) {
    transcript.push({ role: "agent", text: turn.follow_up_question });
    transcript.push({
      role: "human",
      text: turn.follow_up_answer === "YES" ? "Yes" : "No",
    });
  }
  if (view.pending_question !== null) {
    transcript.push({ role: "agent", text: view.pending_question });
  }
  return {
    started: true,
    transcript,
    buttonsEnabled: view.status === "AWAITING_ANSWER" && !inFlight,
    decisionBadge: view.status === "CLOSED" ? view.decision : null,
    errorBanner,
    heat: unitHeat(view),
  };
}

/** Session flow driver: one in-flight request at a time, the server is the
 * only source of truth (no optimistic updates). */
export class ChatController {
  private view: SessionView | null = null;
  private inFlight = false;
  private error: string | null = null;

  constructor(private readonly client: ApiClient) {}

  state(): ViewState {
    return deriveViewState(this.view, this.inFlight, this.error);
  }

  async start(document: string, question: string, scenario = ""): Promise<ViewState> {
    if (this.inFlight) {
      return this.state();
    }
    this.inFlight = true;
    this.error = null;
    try {
      this.view = await this.client.startSession(document, question, scenario);
    } catch (err) {
      // Form stays usable; the transcript (empty or previous) is untouched.
      this.error = describe(err);
    } finally {
      this.inFlight = false;
    }
    return this.state();
  }

  async answer(answer: Answer): Promise<ViewState> {
    if (this.inFlight || this.view === null || this.view.status !== "AWAITING_ANSWER") {
      return this.state();
    }
    this.inFlight = true;
    this.error = null;
    const sessionId = this.view.session_id;
    try {
      this.view = await this.client.submitAnswer(sessionId, answer);
    } catch (err) {
      if (err instanceof ApiError && err.status === 409) {
        // Stale session: somebody answered first; re-sync from the server.
        this.view = await this.client.getSession(sessionId);
      } else {
        this.error = describe(err);
      }
    } finally {
      this.inFlight = false;
    }
    return this.state();
  }
}

function describe(err: unknown): string {
  return err instanceof Error ? err.message : String(err);
}
