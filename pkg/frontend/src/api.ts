import { apiBase } from "./config.js";
import { Answer, SessionView, SessionViewSchema } from "./types.js";

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    detail: string,
  ) {
    super(`API error ${status}: ${detail}`);
  }
}

async function parseSession(response: Response): Promise<SessionView> {
  const body: unknown = await response.json();
  if (!response.ok) {
    const detail =
      typeof body === "object" && body !== null && "detail" in body
        ? JSON.stringify((body as { detail: unknown }).detail)
        : response.statusText;
    throw new ApiError(response.status, detail);
  }
  return SessionViewSchema.parse(body);
}

/** Thin typed client over the session endpoints; every response is
 * schema-validated before the UI sees it. */
export class ApiClient {
  private readonly base: string;
  private readonly fetchImpl: FetchLike;

  constructor(base?: string, fetchImpl?: FetchLike) {
    this.base = base ?? apiBase();
    this.fetchImpl = fetchImpl ?? ((input, init) => fetch(input, init));
  }

  startSession(document: string, question: string, scenario = ""): Promise<SessionView> {
    return this.post("/sessions", { document, question, scenario });
  }

  submitAnswer(sessionId: string, answer: Answer): Promise<SessionView> {
    return this.post(`/sessions/${sessionId}/answer`, { answer });
  }

  async getSession(sessionId: string): Promise<SessionView> {
    const response = await this.fetchImpl(`${this.base}/sessions/${sessionId}`, {
      method: "GET",
    });
    return parseSession(response);
  }

  private async post(path: string, body: unknown): Promise<SessionView> {
    const response = await this.fetchImpl(`${this.base}${path}`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
    return parseSession(response);
  }
}
