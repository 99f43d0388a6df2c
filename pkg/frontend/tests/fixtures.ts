/**
 * Recorded node responses for the canonical demo author (the same dataset
 * the credentials screen prefils). Values mirror what a real node serves;
 * the integration test re-derives them live.
 */

import type { BlockDoc, ChainDoc, SessionView, ValidateDoc } from '../src/api.js';

export const BREAKDOWN = {
  publications: { unified: 3, common: 1, unique_scopus: 1, unique_wos: 1, rejected: 1 },
  citations: { kept: 5, self: 1, retracted: 1, authentic: 3, common: 0, rejected: 2 },
};

export function sessionView(overrides: Partial<SessionView> = {}): SessionView {
  return {
    schema: 'por.session.v1',
    session_id: 'fedcba9876543210',
    state: 'AWAIT_SELF',
    author_ref: 'scopus:57200000001+wos:A-1234-2019',
    display_name: 'A. Example',
    audit_flag: true,
    breakdown: structuredClone(BREAKDOWN),
    include_self: null,
    include_retracted: null,
    metrics: null,
    ...overrides,
  };
}

export const METRICS_BOTH = {
  h_index: 2,
  publication_count: 3,
  citation_count: 5,
  included_self: true,
  included_retracted: true,
};

export const METRICS_NEITHER = {
  h_index: 1,
  publication_count: 3,
  citation_count: 3,
  included_self: false,
  included_retracted: false,
};

export const GENESIS_BLOCK: BlockDoc = {
  index: 0,
  timestamp: 0,
  author_ref: 'genesis',
  payload: null,
  prev_hash: '0'.repeat(64),
  hash: '2c0ad1331b18f10eefcda9a1d3132115c60e25ed1a4b1397b3eabeb22ba5f591',
};

export const PUBLISHED_BLOCK: BlockDoc = {
  index: 1,
  timestamp: 1700000000000,
  author_ref: 'scopus:57200000001+wos:A-1234-2019',
  payload: {
    author_ref: 'scopus:57200000001+wos:A-1234-2019',
    metrics: METRICS_BOTH,
    evidence: {
      publications: ['10.1000/a', '10.1000/b', '10.1000/c'],
      citations: [
        { cited_doi: '10.1000/a', citing_doi: '10.2000/c1', self_citation: true, retracted: false },
        { cited_doi: '10.1000/a', citing_doi: '10.2000/c2', self_citation: false, retracted: true },
        { cited_doi: '10.1000/a', citing_doi: '10.2000/c3', self_citation: false, retracted: false },
        { cited_doi: '10.1000/b', citing_doi: '10.2000/c4', self_citation: false, retracted: false },
        { cited_doi: '10.1000/b', citing_doi: '10.2000/c5', self_citation: false, retracted: false },
      ],
    },
    attestation: {
      include_self: true,
      include_retracted: true,
      publish: true,
      dataset_digest: 'd'.repeat(64),
      author_public_key: 'a'.repeat(64),
      signature: 'b'.repeat(128),
      decided_at: 1700000000000,
    },
  },
  prev_hash: GENESIS_BLOCK.hash,
  hash: 'c'.repeat(64),
};

export const CHAIN: ChainDoc = {
  schema: 'por.chain.v1',
  blocks: [GENESIS_BLOCK, PUBLISHED_BLOCK],
};

export const VALID_VERDICT: ValidateDoc = {
  schema: 'por.validate.v1',
  valid: true,
  violation: null,
};

type Handler = (init?: RequestInit) => { status: number; body: unknown };

/**
 * Install a scripted fetch for unit tests. Routes are matched by
 * `METHOD path`; every call is recorded for assertion.
 */
export function installFetchStub(routes: Record<string, Handler>) {
  const calls: Array<{ key: string; body: unknown }> = [];
  globalThis.POR_NODE_URL = 'http://stub';
  globalThis.fetch = (async (input: RequestInfo | URL, init?: RequestInit) => {
    const url = String(input);
    const method = init?.method ?? 'GET';
    const key = `${method} ${url.replace('http://stub', '')}`;
    const handler = routes[key];
    calls.push({ key, body: init?.body ? JSON.parse(String(init.body)) : undefined });
    if (!handler) {
      throw new TypeError(`fetch failed (no route for ${key})`);
    }
    const { status, body } = handler(init);
    return new Response(JSON.stringify(body), {
      status,
      headers: { 'content-type': 'application/json' },
    });
  }) as typeof fetch;
  return calls;
}

export function errorDoc(error: string, detail: string) {
  return { schema: 'por.error.v1', error, detail };
}
