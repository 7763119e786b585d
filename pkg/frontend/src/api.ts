/** Client for the sidsearch /v1 HTTP API. */

export interface ResultCard {
  rank: number;
  product_id: string;
  rm_raw: number;
  rm_ttr: number;
  best_sid: string;
  caption: string;
  image_ref: string;
}

export interface TurnPayload {
  session_id: string;
  turn: number;
  user_text: string;
  inferred_query: string;
  results: ResultCard[];
}

export interface SessionConfig {
  decode: Record<string, number>;
  ttr: { enabled: boolean; evaluator: string; parallelism: number; strict: boolean };
}

export interface SessionInfo {
  session_id: string;
  config: SessionConfig;
}

export interface SessionOverrides {
  ttr_enabled?: boolean;
  beam_width?: number;
  top_b?: number;
  k_results?: number;
}

export interface ApiError extends Error {
  status: number;
  code: string;
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

function apiError(status: number, code: string, message: string): ApiError {
  const err = new Error(message) as ApiError;
  err.status = status;
  err.code = code;
  return err;
}

async function parseOrThrow<T>(res: Response): Promise<T> {
  if (res.ok) {
    return (await res.json()) as T;
  }
  let code = "http_error";
  let message = `request failed (${res.status})`;
  try {
    const body = (await res.json()) as { code?: string; message?: string };
    if (body.code) code = body.code;
    if (body.message) message = body.message;
  } catch {
    // non-JSON error body; keep the generic message
  }
  throw apiError(res.status, code, message);
}

export class ApiClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchImpl: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private url(path: string): string {
    return `${this.baseUrl.replace(/\/$/, "")}${path}`;
  }

  async createSession(overrides: SessionOverrides = {}): Promise<SessionInfo> {
    const res = await this.fetchImpl(this.url("/v1/sessions"), {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(overrides),
    });
    return parseOrThrow<SessionInfo>(res);
  }

  async postTurn(
    sessionId: string,
    userText: string,
    refProductId?: string,
  ): Promise<TurnPayload> {
    const body: Record<string, string> = { user_text: userText };
    if (refProductId) body.ref_product_id = refProductId;
    const res = await this.fetchImpl(this.url(`/v1/sessions/${sessionId}/turns`), {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
    return parseOrThrow<TurnPayload>(res);
  }

  async health(): Promise<{ status: string; products: number }> {
    const res = await this.fetchImpl(this.url("/v1/healthz"));
    return parseOrThrow(res);
  }
}
