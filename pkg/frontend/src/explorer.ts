/**
 * Chain explorer: the node's full chain, its validation verdict, and a
 * per-block detail pane with attestation fields. All values are rendered
 * exactly as the API reported them.
 */

import { getChain, validateChain, type BlockDoc, type ChainDoc, type ValidateDoc } from './api.js';

function h(tag: string, className: string, text?: string): HTMLElement {
  const el = document.createElement(tag);
  el.className = className;
  if (text !== undefined) el.textContent = text;
  return el;
}

function row(...cells: Array<string | HTMLElement>): HTMLElement {
  const tr = document.createElement('tr');
  for (const cell of cells) {
    const td = document.createElement('td');
    if (typeof cell === 'string') td.textContent = cell;
    else td.appendChild(cell);
    tr.appendChild(td);
  }
  return tr;
}

function renderDetail(block: BlockDoc, verdict: ValidateDoc): HTMLElement {
  const pane = h('section', 'block-detail');
  pane.id = 'block-detail';
  pane.appendChild(h('h3', '', `Block #${block.index}`));
  const list = h('dl', 'block-fields');
  const def = (label: string, value: string, id?: string) => {
    list.appendChild(h('dt', '', label));
    const dd = h('dd', '', value);
    if (id) dd.id = id;
    list.appendChild(dd);
  };
  def('Fingerprint', block.hash);
  def('Parent fingerprint', block.prev_hash);
  def('Timestamp (ms UTC)', String(block.timestamp));
  def('Author', block.author_ref);
  if (block.payload) {
    def('h-index', String(block.payload.metrics.h_index), 'detail-h-index');
    def('Publications', String(block.payload.metrics.publication_count), 'detail-publications');
    def('Citations', String(block.payload.metrics.citation_count), 'detail-citations');
    def('Self citations counted', block.payload.attestation.include_self ? 'yes' : 'no');
    def('Retracted citations counted', block.payload.attestation.include_retracted ? 'yes' : 'no');
    def('Dataset fingerprint', block.payload.attestation.dataset_digest);
    def('Author signature', block.payload.attestation.signature.slice(0, 32) + '…');
    def('Evidence', `${block.payload.evidence.publications.length} publications, ${block.payload.evidence.citations.length} citation keys`);
    const attVerdict = verdict.valid
      ? 'verified (chain validation passed)'
      : `NOT verified (chain invalid at block ${verdict.violation?.index})`;
    def('Attestation verdict', attVerdict, 'detail-attestation-verdict');
  } else {
    def('Payload', 'none (genesis)');
  }
  pane.appendChild(list);
  return pane;
}

export async function renderExplorer(root: HTMLElement): Promise<void> {
  const section = h('div', 'explorer');
  section.appendChild(h('h2', '', 'Chain explorer'));
  root.appendChild(section);

  let chain: ChainDoc;
  let verdict: ValidateDoc;
  try {
    [chain, verdict] = await Promise.all([getChain(), validateChain()]);
  } catch {
    const failure = h('p', 'error', 'The node did not answer; nothing to explore.');
    failure.id = 'explorer-error';
    section.appendChild(failure);
    return;
  }

  const banner = h(
    'div',
    verdict.valid ? 'verdict-ok' : 'verdict-bad',
    verdict.valid
      ? 'Chain valid: every fingerprint, link, and attestation checks out.'
      : `Chain INVALID at block ${verdict.violation?.index}: ${verdict.violation?.reason}`,
  );
  banner.id = 'chain-verdict';
  section.appendChild(banner);

  const count = h('p', 'chain-length', `${chain.blocks.length} blocks (including genesis)`);
  count.id = 'chain-length';
  section.appendChild(count);

  const table = h('table', 'chain-table') as HTMLTableElement;
  table.id = 'chain-table';
  const head = document.createElement('tr');
  for (const title of ['#', 'Author', 'h', 'Pubs', 'Cites', 'Fingerprint']) {
    head.appendChild(h('th', '', title));
  }
  table.appendChild(head);

  const detailSlot = h('div', 'detail-slot');

  for (const block of chain.blocks) {
    const tr = row(
      String(block.index),
      block.payload ? block.author_ref : 'genesis',
      block.payload ? String(block.payload.metrics.h_index) : '—',
      block.payload ? String(block.payload.metrics.publication_count) : '—',
      block.payload ? String(block.payload.metrics.citation_count) : '—',
      block.hash.slice(0, 16) + '…',
    );
    tr.className = 'chain-row';
    tr.dataset.index = String(block.index);
    tr.addEventListener('click', () => {
      detailSlot.innerHTML = '';
      detailSlot.appendChild(renderDetail(block, verdict));
    });
    table.appendChild(tr);
  }
  section.appendChild(table);
  section.appendChild(detailSlot);
}
