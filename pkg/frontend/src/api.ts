import type { Choice, CurvePoint, PendingQueryDoc, StatusDoc } from "./types.js";

/** Raised for non-2xx API responses; carries the machine-readable code. */
export class ApiRequestError extends Error {
  constructor(
    public readonly status: number,
    public readonly code: string,
    message: string,
  ) {
    super(message);
  }
}

async function parseError(response: Response): Promise<ApiRequestError> {
  let code = "unknown";
  let message = `HTTP ${response.status}`;
  try {
    const body = await response.json();
    code = body.code ?? code;
    message = body.message ?? message;
  } catch {
    // non-JSON error body; keep defaults
  }
  return new ApiRequestError(response.status, code, message);
}

export class ApiClient {
  constructor(private readonly baseUrl: string = "") {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await fetch(this.baseUrl + path, init);
    if (!response.ok) {
      throw await parseError(response);
    }
    return (await response.json()) as T;
  }

  getStatus(): Promise<StatusDoc> {
    return this.request<StatusDoc>("/api/status");
  }

  async getClasses(): Promise<string[]> {
    const doc = await this.request<{ classes: string[] }>("/api/classes");
    return doc.classes;
  }

  getNext(): Promise<PendingQueryDoc> {
    return this.request<PendingQueryDoc>("/api/next");
  }

  getCurve(): Promise<CurvePoint[]> {
    return this.request<CurvePoint[]>("/api/curve");
  }

  submitLabel(queryId: string, choice: Choice): Promise<{ ok: boolean; status: StatusDoc }> {
    const body =
      choice.kind === "label"
        ? { query_id: queryId, label: choice.classIndex }
        : { query_id: queryId, reject: true };
    return this.request("/api/label", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
  }
}
