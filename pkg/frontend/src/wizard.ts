/**
 * The consent wizard. Strictly server-driven: what is asked next comes
 * from the session state the node reported, so consents cannot be issued
 * out of order — a stage's buttons simply do not exist in the DOM until
 * the server says that stage is live.
 *
 * A 409 means the step was already answered (double click, second tab):
 * the view is re-fetched and a notice shown. A transport failure renders
 * a retry affordance that re-fetches the session instead of resubmitting
 * the consent, so an answer can never be applied twice.
 */

import {
  ApiError,
  getSession,
  sendConsent,
  type ConsentStage,
  type SessionBreakdown,
  type SessionView,
  type UnifiedMetrics,
} from './api.js';
import { store } from './store.js';

function h(tag: string, className: string, text?: string): HTMLElement {
  const el = document.createElement(tag);
  el.className = className;
  if (text !== undefined) el.textContent = text;
  return el;
}

function statRow(table: HTMLElement, label: string, value: number | string, id: string): void {
  const row = h('tr', 'stat');
  const name = h('td', 'stat-label', label);
  const cell = h('td', 'stat-value', String(value));
  cell.id = id;
  row.append(name, cell);
  table.appendChild(row);
}

export function renderBreakdown(view: SessionView): HTMLElement {
  const box = h('section', 'breakdown');
  box.appendChild(h('h3', '', 'Unified record'));
  if (view.audit_flag) {
    const banner = h(
      'div',
      'audit-banner',
      'Audit: the two sources share no citations at all (common citation count = 0). ' +
        'This record is flagged for an organization-level credential audit.',
    );
    banner.id = 'audit-banner';
    box.appendChild(banner);
  }
  const b: SessionBreakdown = view.breakdown;
  const pubs = h('table', 'stats');
  pubs.appendChild(h('caption', '', 'Publications'));
  statRow(pubs, 'Unified', b.publications.unified, 'pub-unified');
  statRow(pubs, 'In both sources', b.publications.common, 'pub-common');
  statRow(pubs, 'Only in Scopus', b.publications.unique_scopus, 'pub-unique-scopus');
  statRow(pubs, 'Only in Web of Science', b.publications.unique_wos, 'pub-unique-wos');
  statRow(pubs, 'Rejected (no DOI)', b.publications.rejected, 'pub-rejected');
  const cites = h('table', 'stats');
  cites.appendChild(h('caption', '', 'Citations'));
  statRow(cites, 'Kept (deduplicated)', b.citations.kept, 'cite-kept');
  statRow(cites, 'Self citations', b.citations.self, 'cite-self');
  statRow(cites, 'Retracted citations', b.citations.retracted, 'cite-retracted');
  statRow(cites, 'Authentic citations', b.citations.authentic, 'cite-authentic');
  statRow(cites, 'In both sources', b.citations.common, 'cite-common');
  statRow(cites, 'Rejected', b.citations.rejected, 'cite-rejected');
  box.append(pubs, cites);
  return box;
}

export function renderMetrics(metrics: UnifiedMetrics, heading: string): HTMLElement {
  const box = h('section', 'metrics');
  box.appendChild(h('h3', '', heading));
  const table = h('table', 'stats');
  statRow(table, 'h-index', metrics.h_index, 'metric-h-index');
  statRow(table, 'Publications', metrics.publication_count, 'metric-publications');
  statRow(table, 'Citations', metrics.citation_count, 'metric-citations');
  statRow(table, 'Self citations counted', metrics.included_self ? 'yes' : 'no', 'metric-included-self');
  statRow(
    table,
    'Retracted citations counted',
    metrics.included_retracted ? 'yes' : 'no',
    'metric-included-retracted',
  );
  box.appendChild(table);
  return box;
}

async function consent(sessionId: string, stage: ConsentStage, agree?: boolean): Promise<void> {
  try {
    const view = await sendConsent(sessionId, stage, agree);
    store.set({ session: view, notice: null, retrySessionId: null });
  } catch (error) {
    if (error instanceof ApiError && error.isConflict) {
      const fresh = await getSession(sessionId);
      store.set({ session: fresh, notice: 'This step was already answered.' });
    } else if (error instanceof ApiError) {
      store.set({ notice: error.message });
    } else {
      store.set({ retrySessionId: sessionId, notice: null });
    }
  }
}

function yesNo(sessionId: string, stage: 'self' | 'retracted' | 'publish', yesLabel: string, noLabel: string): HTMLElement {
  const controls = h('div', 'consent-controls');
  const yes = h('button', 'consent-yes', yesLabel) as HTMLButtonElement;
  yes.id = `consent-${stage}-yes`;
  yes.addEventListener('click', () => void consent(sessionId, stage, true));
  const no = h('button', 'consent-no', noLabel) as HTMLButtonElement;
  no.id = `consent-${stage}-no`;
  no.addEventListener('click', () => void consent(sessionId, stage, false));
  controls.append(yes, no);
  return controls;
}

function renderStage(view: SessionView): HTMLElement {
  const stage = h('section', 'stage');
  stage.id = 'stage';
  stage.dataset.state = view.state;
  const sid = view.session_id;

  switch (view.state) {
    case 'AWAIT_SELF': {
      stage.appendChild(h('h3', '', 'Step 1 of 3 — self citations'));
      stage.appendChild(
        h(
          'p',
          '',
          `${view.breakdown.citations.self} of your citations come from your own papers. ` +
            'Count them as actual citations?',
        ),
      );
      stage.appendChild(yesNo(sid, 'self', 'Count them', 'Discard them'));
      break;
    }
    case 'AWAIT_RETRACTED': {
      stage.appendChild(h('h3', '', 'Step 2 of 3 — retracted citations'));
      stage.appendChild(
        h(
          'p',
          '',
          `${view.breakdown.citations.retracted} of your citations come from retracted work. ` +
            'Count them anyway?',
        ),
      );
      stage.appendChild(yesNo(sid, 'retracted', 'Count them', 'Reject them'));
      break;
    }
    case 'METRICS_READY': {
      stage.appendChild(renderMetrics(view.metrics!, 'Your unified metrics'));
      const next = h('button', 'ack', 'Continue to publication') as HTMLButtonElement;
      next.id = 'consent-ack';
      next.addEventListener('click', () => void consent(sid, 'ack'));
      stage.appendChild(next);
      break;
    }
    case 'AWAIT_PUBLISH': {
      stage.appendChild(h('h3', '', 'Step 3 of 3 — publish'));
      stage.appendChild(renderMetrics(view.metrics!, 'About to be published'));
      stage.appendChild(
        h('p', '', 'Publish these metrics as a signed block on the distributed ledger?'),
      );
      stage.appendChild(yesNo(sid, 'publish', 'Publish the block', 'No, just show me'));
      break;
    }
    case 'PUBLISHED': {
      stage.appendChild(h('h3', '', 'Published'));
      stage.appendChild(renderMetrics(view.metrics!, 'Now on the ledger'));
      if (view.block) {
        const summary = h(
          'p',
          'block-summary',
          `Block #${view.block.index} · fingerprint ${view.block.hash.slice(0, 16)}…`,
        );
        summary.id = 'published-block';
        stage.appendChild(summary);
      }
      const explore = h('button', 'nav-explorer', 'Open the chain explorer') as HTMLButtonElement;
      explore.id = 'goto-explorer';
      explore.addEventListener('click', () => store.set({ route: 'explorer' }));
      stage.appendChild(explore);
      break;
    }
    case 'DECLINED': {
      stage.appendChild(h('h3', '', 'Not published'));
      stage.appendChild(
        h('p', '', 'As requested, nothing was written to the ledger. Your metrics, for your eyes:'),
      );
      stage.appendChild(renderMetrics(view.metrics!, 'Your unified metrics'));
      break;
    }
  }
  return stage;
}

export function renderWizard(root: HTMLElement, view: SessionView): void {
  const wizard = h('div', 'wizard');
  const header = h('header', 'wizard-header');
  header.appendChild(h('h2', '', view.display_name || view.author_ref));
  header.appendChild(h('p', 'author-ref', view.author_ref));
  wizard.appendChild(header);

  const state = store.get();
  if (state.notice) {
    const notice = h('div', 'notice', state.notice);
    notice.id = 'notice';
    wizard.appendChild(notice);
  }
  if (state.retrySessionId) {
    const retryBox = h('div', 'retry');
    retryBox.id = 'retry';
    retryBox.appendChild(
      h('p', '', 'The node did not answer. Your consent was not resubmitted.'),
    );
    const retry = h('button', 'retry-button', 'Reload session state') as HTMLButtonElement;
    retry.id = 'retry-button';
    retry.addEventListener('click', async () => {
      try {
        const fresh = await getSession(state.retrySessionId!);
        store.set({ session: fresh, retrySessionId: null });
      } catch {
        /* keep the retry affordance */
      }
    });
    retryBox.appendChild(retry);
    wizard.appendChild(retryBox);
  }

  wizard.appendChild(renderBreakdown(view));
  wizard.appendChild(renderStage(view));
  root.appendChild(wizard);
}
