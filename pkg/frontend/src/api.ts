import type { CreateSessionBody, SessionView } from "./types.js";

/** Error carrying the server's own explanation, verbatim. */
export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly detail: string,
  ) {
    super(detail);
    this.name = "ApiError";
  }
}

async function parseError(response: Response): Promise<never> {
  let detail = `${response.status} ${response.statusText}`;
  try {
    const body = await response.json();
    if (typeof body.detail === "string") detail = body.detail;
    else if (body.detail) detail = JSON.stringify(body.detail);
  } catch {
    // keep the status line
  }
  throw new ApiError(response.status, detail);
}

export class ApiClient {
  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchFn: typeof fetch = fetch,
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchFn(this.baseUrl + path, init);
    if (!response.ok) await parseError(response);
    if (response.status === 204) return undefined as T;
    return (await response.json()) as T;
  }

  createSession(body: CreateSessionBody): Promise<SessionView> {
    return this.request("/sessions", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
  }

  getState(id: string): Promise<SessionView> {
    return this.request(`/sessions/${id}`);
  }

  postFeedback(id: string, guess: string, feedback: string): Promise<SessionView> {
    return this.request(`/sessions/${id}/feedback`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ guess, feedback }),
    });
  }

  deleteSession(id: string): Promise<void> {
    return this.request(`/sessions/${id}`, { method: "DELETE" });
  }
}
