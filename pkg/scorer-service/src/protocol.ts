/**
 * Wire protocol: newline-delimited JSON, one request per line, one response
 * per line, answered in order per connection.
 *
 * Request:  {"op": <op>, "id": <string>, "payload": {...}}
 * Response: {"id": <string>, "values": [...]}
 *        or {"id": <string>, "error": {"code": <string>, "message": <string>}}
 *
 * Payload shapes by op:
 *   semantic_similarity  {"pairs": [[a, b], ...]}
 *   perplexity           {"texts": [...]}
 *   importance           {"windows": [...]}
 *   rewrite              {"sources": [...]}
 */

import type { Backend } from "./backends.js";

export const OPS = ["semantic_similarity", "perplexity", "importance", "rewrite"] as const;
export type Op = (typeof OPS)[number];

export interface ServiceRequest {
  op: Op;
  id: string;
  payload: Record<string, unknown>;
}

export interface ServiceError {
  code: string;
  message: string;
}

export type ServiceResponse =
  | { id: string; values: Array<number | string> }
  | { id: string; error: ServiceError };

const PAYLOAD_FIELD: Record<Op, string> = {
  semantic_similarity: "pairs",
  perplexity: "texts",
  importance: "windows",
  rewrite: "sources",
};

function errorResponse(id: string, code: string, message: string): ServiceResponse {
  return { id, error: { code, message } };
}

function isStringPair(item: unknown): item is [string, string] {
  return (
    Array.isArray(item) &&
    item.length === 2 &&
    typeof item[0] === "string" &&
    typeof item[1] === "string"
  );
}

/**
 * Validate a decoded request object. Returns the typed request or an error
 * response carrying whatever id could be salvaged.
 */
export function validateRequest(
  obj: unknown,
): { ok: true; request: ServiceRequest } | { ok: false; response: ServiceResponse } {
  if (typeof obj !== "object" || obj === null || Array.isArray(obj)) {
    return { ok: false, response: errorResponse("", "bad_request", "request must be a JSON object") };
  }
  const record = obj as Record<string, unknown>;
  const id = typeof record.id === "string" ? record.id : "";
  const op = record.op;
  if (typeof op !== "string" || !(OPS as readonly string[]).includes(op)) {
    return { ok: false, response: errorResponse(id, "bad_request", `unknown op ${JSON.stringify(op)}`) };
  }
  const payload = record.payload;
  if (typeof payload !== "object" || payload === null || Array.isArray(payload)) {
    return { ok: false, response: errorResponse(id, "bad_request", "payload must be an object") };
  }
  const field = PAYLOAD_FIELD[op as Op];
  const items = (payload as Record<string, unknown>)[field];
  if (!Array.isArray(items) || items.length === 0) {
    return {
      ok: false,
      response: errorResponse(id, "bad_request", `payload.${field} must be a non-empty array`),
    };
  }
  if (op === "semantic_similarity") {
    if (!items.every(isStringPair)) {
      return {
        ok: false,
        response: errorResponse(id, "bad_request", "pairs must be [string, string] tuples"),
      };
    }
  } else if (!items.every((item) => typeof item === "string")) {
    return {
      ok: false,
      response: errorResponse(id, "bad_request", `${field} must contain strings`),
    };
  }
  return { ok: true, request: { op: op as Op, id, payload: payload as Record<string, unknown> } };
}

const clamp01 = (x: number) => Math.min(Math.max(x, 0), 1);

/** Dispatch a valid request to the backend, enforcing response invariants. */
export function handleRequest(request: ServiceRequest, backend: Backend): ServiceResponse {
  try {
    switch (request.op) {
      case "semantic_similarity": {
        const pairs = request.payload.pairs as Array<[string, string]>;
        const values = pairs.map(([a, b]) => clamp01(backend.semanticSimilarity(a, b)));
        return { id: request.id, values };
      }
      case "perplexity": {
        const texts = request.payload.texts as string[];
        const values = texts.map((t) => {
          const ppl = backend.perplexity(t);
          if (!(ppl > 0) || !Number.isFinite(ppl)) {
            throw new Error(`backend produced non-positive perplexity ${ppl}`);
          }
          return ppl;
        });
        return { id: request.id, values };
      }
      case "importance": {
        const windows = request.payload.windows as string[];
        return { id: request.id, values: windows.map((w) => clamp01(backend.importance(w))) };
      }
      case "rewrite": {
        const sources = request.payload.sources as string[];
        return { id: request.id, values: sources.map((s) => backend.rewrite(s)) };
      }
    }
  } catch (err) {
    return errorResponse(
      request.id,
      "backend_error",
      err instanceof Error ? err.message : String(err),
    );
  }
}

/** Process one raw protocol line; never throws, always yields one response line. */
export function handleLine(line: string, backend: Backend): string {
  let decoded: unknown;
  try {
    decoded = JSON.parse(line);
  } catch {
    return JSON.stringify(errorResponse("", "bad_request", "line is not valid JSON"));
  }
  const validated = validateRequest(decoded);
  const response = validated.ok ? handleRequest(validated.request, backend) : validated.response;
  return JSON.stringify(response);
}
