/**
 * Typed client for the por-ledger node HTTP API.
 *
 * The UI performs no metric math of its own: every number rendered
 * anywhere comes out of these response documents verbatim.
 *
 * The node base URL comes from a single configuration value: the static
 * server injects `window.POR_NODE_URL` (from the POR_NODE_URL environment
 * variable); tests set `globalThis.POR_NODE_URL` directly.
 */

export interface UnifiedMetrics {
  h_index: number;
  publication_count: number;
  citation_count: number;
  included_self: boolean;
  included_retracted: boolean;
}

export interface SessionBreakdown {
  publications: {
    unified: number;
    common: number;
    unique_scopus: number;
    unique_wos: number;
    rejected: number;
  };
  citations: {
    kept: number;
    self: number;
    retracted: number;
    authentic: number;
    common: number;
    rejected: number;
  };
}

export type SessionStateName =
  | 'AWAIT_SELF'
  | 'AWAIT_RETRACTED'
  | 'METRICS_READY'
  | 'AWAIT_PUBLISH'
  | 'PUBLISHED'
  | 'DECLINED';

export interface SessionView {
  schema: 'por.session.v1';
  session_id: string;
  state: SessionStateName;
  author_ref: string;
  display_name: string;
  audit_flag: boolean;
  breakdown: SessionBreakdown;
  include_self: boolean | null;
  include_retracted: boolean | null;
  metrics: UnifiedMetrics | null;
  block?: BlockDoc;
}

export interface AttestationDoc {
  include_self: boolean;
  include_retracted: boolean;
  publish: boolean;
  dataset_digest: string;
  author_public_key: string;
  signature: string;
  decided_at: number;
}

export interface BlockPayloadDoc {
  author_ref: string;
  metrics: UnifiedMetrics;
  evidence: {
    publications: string[];
    citations: Array<{
      cited_doi: string;
      citing_doi: string;
      self_citation: boolean;
      retracted: boolean;
    }>;
  };
  attestation: AttestationDoc;
}

export interface BlockDoc {
  index: number;
  timestamp: number;
  author_ref: string;
  payload: BlockPayloadDoc | null;
  prev_hash: string;
  hash: string;
}

export interface ChainDoc {
  schema: 'por.chain.v1';
  blocks: BlockDoc[];
}

export interface ValidateDoc {
  schema: 'por.validate.v1';
  valid: boolean;
  violation: { index: number; reason: string } | null;
}

export interface ErrorDoc {
  schema: 'por.error.v1';
  error: string;
  detail: string;
}

export type ConsentStage = 'self' | 'retracted' | 'ack' | 'publish';

export interface AuthorInput {
  scopus_id: string;
  wos_id: string;
  display_name: string;
}

/** Raised for any non-2xx node response; carries the node's error doc. */
export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly doc: ErrorDoc,
  ) {
    super(`${doc.error}: ${doc.detail}`);
  }

  get isConflict(): boolean {
    return this.status === 409;
  }
}

declare global {
  // eslint-disable-next-line no-var
  var POR_NODE_URL: string | undefined;
}

export function nodeBaseUrl(): string {
  return (globalThis.POR_NODE_URL ?? 'http://127.0.0.1:8080').replace(/\/+$/, '');
}

async function request<T>(path: string, init?: RequestInit): Promise<T> {
  const response = await fetch(nodeBaseUrl() + path, {
    headers: { 'content-type': 'application/json' },
    ...init,
  });
  const doc = await response.json();
  if (!response.ok) {
    throw new ApiError(response.status, doc as ErrorDoc);
  }
  return doc as T;
}

export function openSession(body: {
  author: AuthorInput;
  scopus?: unknown;
  wos?: unknown;
  conflate?: unknown;
}): Promise<SessionView> {
  return request<SessionView>('/sessions', { method: 'POST', body: JSON.stringify(body) });
}

export function getSession(sessionId: string): Promise<SessionView> {
  return request<SessionView>(`/sessions/${sessionId}`);
}

export function sendConsent(
  sessionId: string,
  stage: ConsentStage,
  agree?: boolean,
): Promise<SessionView> {
  const body: { stage: ConsentStage; agree?: boolean } = { stage };
  if (agree !== undefined) body.agree = agree;
  return request<SessionView>(`/sessions/${sessionId}/consent`, {
    method: 'POST',
    body: JSON.stringify(body),
  });
}

export function getChain(): Promise<ChainDoc> {
  return request<ChainDoc>('/chain');
}

export function validateChain(): Promise<ValidateDoc> {
  return request<ValidateDoc>('/chain/validate');
}
