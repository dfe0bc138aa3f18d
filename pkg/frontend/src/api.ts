// Thin typed client over the annotation service. The UI never computes
// anything model-related itself; every number it shows comes from here.

import type {
  ApiError,
  LabelEntry,
  QueryBatch,
  SessionView,
  SubmitResult,
} from "./types.js";

export class ServiceError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
  ) {
    super(message);
  }
}

async function parseError(response: Response): Promise<ServiceError> {
  let code = "unknown";
  let message = response.statusText;
  try {
    const body = (await response.json()) as ApiError;
    if (body.error) {
      code = body.error.code;
      message = body.error.message;
    }
  } catch {
    // non-JSON error body; keep the status text
  }
  return new ServiceError(response.status, code, message);
}

async function request<T>(
  baseUrl: string,
  path: string,
  init?: RequestInit,
): Promise<T> {
  const response = await fetch(`${baseUrl}${path}`, init);
  if (!response.ok && response.status !== 202) {
    throw await parseError(response);
  }
  return (await response.json()) as T;
}

export class AnnotateClient {
  constructor(readonly baseUrl: string = "") {}

  createSession(request_: unknown): Promise<{ session_id: string }> {
    return request(this.baseUrl, "/sessions", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(request_),
    });
  }

  getSession(sessionId: string): Promise<SessionView> {
    return request(this.baseUrl, `/sessions/${sessionId}`);
  }

  nextBatch(sessionId: string): Promise<QueryBatch> {
    return request(this.baseUrl, `/sessions/${sessionId}/next-batch`, {
      method: "POST",
    });
  }

  submitLabels(
    sessionId: string,
    batchId: string,
    labels: LabelEntry[],
  ): Promise<SubmitResult> {
    return request(this.baseUrl, `/sessions/${sessionId}/labels`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ batch_id: batchId, labels }),
    });
  }

  health(): Promise<{ status: string }> {
    return request(this.baseUrl, "/healthz");
  }
}
