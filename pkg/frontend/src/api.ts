/**
 * Typed client for the lexparse session API.  All console data comes from
 * these endpoints; the console computes no metrics of its own.
 */

export interface LexiconEntryDto {
  key: string;
  value: string;
  domain: string;
  source: string;
  seq: number | null;
}

export interface RankedEntryDto {
  entry: LexiconEntryDto;
  score: number;
}

export interface RetrievalDto {
  query: string;
  n: number;
  snapshot_seq: number;
  ranked: RankedEntryDto[];
}

export interface ParseRecordDto {
  t: number;
  x: string;
  y: string;
  retrieved: RetrievalDto;
  input_text: string;
  y_hat: string;
  ovc_gold: string[];
  ovc_pred: string[];
  k_new_added: LexiconEntryDto[];
  kb_size_after: number;
  backend_meta: Record<string, unknown>;
}

export interface SessionInfoDto {
  id: string;
  status: string;
  t: number;
  stream_size: number;
  kb_size?: number;
}

export interface PeekDto {
  t: number;
  x: string;
  retrieved: RetrievalDto;
}

export interface ParseResponseDto {
  record: ParseRecordDto;
  status: string;
  kb_size: number;
}

export interface LexiconResponseDto {
  added: number;
  submitted: number;
  kb_size: number;
}

export interface KbDto {
  identity_mode: string;
  entries: LexiconEntryDto[];
}

export interface ReportDto {
  corpus_bleu: number;
  ovc_precision: number;
  ovc_recall: number;
  ovc_f1: number;
  reading_cost: number;
  error_cost: number;
  total_cost: number;
  reuse: Record<string, unknown>;
  metadata: Record<string, unknown>;
}

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly detail: string,
  ) {
    super(`HTTP ${status}: ${detail}`);
  }
}

async function request<T>(url: string, init?: RequestInit): Promise<T> {
  const resp = await fetch(url, init);
  if (!resp.ok) {
    let detail = resp.statusText;
    try {
      const body = (await resp.json()) as { detail?: unknown };
      if (body.detail !== undefined) detail = String(body.detail);
    } catch {
      // non-JSON error body; keep the status text
    }
    throw new ApiError(resp.status, detail);
  }
  return (await resp.json()) as T;
}

export class ApiClient {
  constructor(private readonly baseUrl: string = "") {}

  createSession(): Promise<SessionInfoDto> {
    return request(`${this.baseUrl}/sessions`, { method: "POST" });
  }

  sessionInfo(id: string): Promise<SessionInfoDto> {
    return request(`${this.baseUrl}/sessions/${id}`);
  }

  next(id: string): Promise<PeekDto> {
    return request(`${this.baseUrl}/sessions/${id}/next`);
  }

  parse(id: string): Promise<ParseResponseDto> {
    return request(`${this.baseUrl}/sessions/${id}/parse`, { method: "POST" });
  }

  submitLexicon(
    id: string,
    entries: Array<{ key: string; value: string }>,
  ): Promise<LexiconResponseDto> {
    return request(`${this.baseUrl}/sessions/${id}/lexicon`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ entries }),
    });
  }

  kb(id: string): Promise<KbDto> {
    return request(`${this.baseUrl}/sessions/${id}/kb`);
  }

  records(id: string): Promise<{ records: ParseRecordDto[] }> {
    return request(`${this.baseUrl}/sessions/${id}/records`);
  }

  report(id: string): Promise<ReportDto> {
    return request(`${this.baseUrl}/sessions/${id}/report`);
  }
}
