/** API base URL from one runtime value; empty string = same origin.
 * Set `window.BIAE_API_BASE = "http://host:port"` before loading the app. */
export function apiBase(): string {
  const scope = globalThis as { BIAE_API_BASE?: unknown };
  return typeof scope.BIAE_API_BASE === "string" ? scope.BIAE_API_BASE : "";
}
