// DOM wiring. Builds the editor chrome around an SVG canvas and translates
// pointer and form events into EditorState calls. All rendering state lives
// in EditorState; this module only reflects it.

import { renderCanvas, scrollFirstHitIntoView, NODE_FILL } from './canvas.js';
import { EditorState } from './state.js';
import type { NodeKind, EvidenceKind } from './types.js';

const NODE_KINDS: { kind: NodeKind; label: string }[] = [
  { kind: 'influencing_factor', label: 'Influencing factor' },
  { kind: 'success_factor', label: 'Success factor' },
  { kind: 'key_factor', label: 'Key factor' },
  { kind: 'assumption_node', label: 'Assumption' },
];

const EVIDENCE_KINDS: EvidenceKind[] = ['assumption', 'reference', 'experience'];

interface DragState {
  sourceId: string;
  startX: number;
  startY: number;
  moved: boolean;
}

function h<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  text?: string,
): HTMLElementTagNameMap[K] {
  const element = document.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) element.setAttribute(key, value);
  if (text !== undefined) element.textContent = text;
  return element;
}

export interface App {
  root: HTMLElement;
  state: EditorState;
  render(): void;
}

export function createApp(root: HTMLElement, state: EditorState): App {
  root.innerHTML = '';
  root.className = 'dreams-app';

  // -- static chrome ---------------------------------------------------------

  const toolbar = h('div', { class: 'toolbar' });
  const title = h('span', { class: 'model-title' });
  const undoButton = h('button', { class: 'undo', title: 'Undo' }, 'Undo');
  const redoButton = h('button', { class: 'redo', title: 'Redo' }, 'Redo');
  const layoutButton = h('button', { class: 'auto-layout' }, 'Auto-layout');
  const polarityToggle = h('button', { class: 'polarity-toggle', title: 'Polarity for new links' }, '+');
  const searchInput = h('input', { class: 'search', type: 'search', placeholder: 'Search model…' });
  const exportButton = h('button', { class: 'export-log' }, 'Export log');
  toolbar.append(title, undoButton, redoButton, layoutButton, polarityToggle, searchInput, exportButton);

  const conflictBanner = h('div', { class: 'banner conflict', hidden: '' });
  conflictBanner.append(
    h('span', {}, 'The model changed on the server. Your last change was not applied.'),
    h('button', { class: 'reload' }, 'Reload'),
  );
  const offlineBanner = h('div', { class: 'banner offline', hidden: '' });
  offlineBanner.append(
    h('span', {}, 'Cannot reach the service. Nothing was lost.'),
    h('button', { class: 'retry' }, 'Retry'),
  );

  const palette = h('div', { class: 'palette' });
  const labelInput = h('input', { class: 'new-label', type: 'text', placeholder: 'New factor label' });
  palette.appendChild(labelInput);
  for (const { kind, label } of NODE_KINDS) {
    const button = h('button', { class: `add-node kind-${kind}`, 'data-kind': kind }, label);
    button.style.background = NODE_FILL[kind];
    palette.appendChild(button);
  }

  const svg = document.createElementNS('http://www.w3.org/2000/svg', 'svg') as SVGSVGElement;
  svg.setAttribute('class', 'canvas');
  const canvasWrap = h('div', { class: 'canvas-wrap' });
  canvasWrap.appendChild(svg);

  const drawer = h('aside', { class: 'drawer', hidden: '' });

  root.append(toolbar, conflictBanner, offlineBanner, palette, canvasWrap, drawer);

  // -- rendering -------------------------------------------------------------

  let animateNext = false;

  function renderDrawer(): void {
    drawer.innerHTML = '';
    const selection = state.selection;
    if (!selection || selection.type !== 'link' || !state.doc) {
      drawer.hidden = true;
      return;
    }
    const link = state.link(selection.id);
    if (!link) {
      drawer.hidden = true;
      return;
    }
    drawer.hidden = false;
    const source = state.node(link.source)?.label ?? link.source;
    const target = state.node(link.target)?.label ?? link.target;
    drawer.appendChild(h('h2', {}, `${source} → ${target}`));
    const polarityButton = h(
      'button',
      { class: 'toggle-polarity' },
      link.polarity === 'positive' ? 'Polarity: +' : 'Polarity: −',
    );
    polarityButton.addEventListener('click', () => {
      void state.togglePolarity(link.id).catch(() => undefined);
    });
    drawer.appendChild(polarityButton);

    const list = h('ul', { class: 'evidence-list' });
    for (const item of link.evidence) {
      const row = h('li', { class: 'evidence-item', 'data-evidence': item.id });
      row.appendChild(h('span', { class: `badge badge-${item.kind}` }, item.kind));
      row.appendChild(h('span', { class: 'text' }, item.text));
      if (item.locator) row.appendChild(h('span', { class: 'locator' }, item.locator));
      const remove = h('button', { class: 'remove-evidence' }, 'Remove');
      remove.addEventListener('click', () => {
        void state.detachEvidence(link.id, item.id).catch(() => undefined);
      });
      row.appendChild(remove);
      list.appendChild(row);
    }
    drawer.appendChild(list);

    const form = h('div', { class: 'evidence-form' });
    const kindSelect = h('select', { class: 'evidence-kind' });
    for (const kind of EVIDENCE_KINDS) kindSelect.appendChild(h('option', { value: kind }, kind));
    const textInput = h('input', { class: 'evidence-text', type: 'text', placeholder: 'Evidence text' });
    const locatorInput = h('input', { class: 'evidence-locator', type: 'text', placeholder: 'Locator (optional)' });
    const attach = h('button', { class: 'attach-evidence' }, 'Attach');
    attach.addEventListener('click', () => {
      const text = textInput.value.trim();
      if (!text) return;
      void state
        .attachEvidence(link.id, {
          kind: kindSelect.value as EvidenceKind,
          text,
          locator: locatorInput.value.trim() || null,
        })
        .then(() => {
          textInput.value = '';
          locatorInput.value = '';
        })
        .catch(() => undefined);
    });
    form.append(kindSelect, textInput, locatorInput, attach);
    drawer.appendChild(form);

    const removeLink = h('button', { class: 'remove-link' }, 'Delete link');
    removeLink.addEventListener('click', () => {
      void state.removeLink(link.id).catch(() => undefined);
    });
    drawer.appendChild(removeLink);
  }

  function render(): void {
    if (state.doc) {
      title.textContent = state.doc.model.title;
      renderCanvas(svg, state.doc, state.layoutResult, {
        highlights: state.highlightIds,
        selection: state.selection,
        overrides: state.overrides,
        animate: animateNext,
      });
      animateNext = false;
    }
    undoButton.disabled = !state.canUndo;
    redoButton.disabled = !state.canRedo;
    polarityToggle.textContent = state.linkPolarity === 'positive' ? '+' : '−';
    conflictBanner.hidden = !state.conflict;
    offlineBanner.hidden = !state.offline;
    renderDrawer();
  }

  state.subscribe(render);

  // -- toolbar actions ---------------------------------------------------------

  undoButton.addEventListener('click', () => void state.undo().catch(() => undefined));
  redoButton.addEventListener('click', () => void state.redo().catch(() => undefined));
  polarityToggle.addEventListener('click', () => {
    state.linkPolarity = state.linkPolarity === 'positive' ? 'negative' : 'positive';
    render();
  });
  layoutButton.addEventListener('click', () => {
    animateNext = true;
    void state.autoLayout(true).catch(() => undefined);
  });
  conflictBanner.querySelector('.reload')!.addEventListener('click', () => {
    void state.reload().catch(() => undefined);
  });
  offlineBanner.querySelector('.retry')!.addEventListener('click', () => state.retryConnection());
  searchInput.addEventListener('keydown', (event) => {
    if ((event as KeyboardEvent).key !== 'Enter') return;
    const q = searchInput.value.trim();
    if (!q) {
      state.clearSearch();
      return;
    }
    void state
      .runSearch(q)
      .then((hits) => scrollFirstHitIntoView(svg, hits))
      .catch(() => undefined);
  });
  exportButton.addEventListener('click', () => {
    const blob = new Blob([state.exportSessionLog()], { type: 'application/json' });
    const url = URL.createObjectURL(blob);
    const anchor = h('a', { href: url, download: 'session-log.json' });
    anchor.click();
    URL.revokeObjectURL(url);
  });

  // -- palette -----------------------------------------------------------------

  palette.addEventListener('click', (event) => {
    const button = (event.target as Element).closest('button.add-node');
    if (!button) return;
    const kind = button.getAttribute('data-kind') as NodeKind;
    const label = labelInput.value.trim() || 'New factor';
    void state
      .addNode({ kind, label })
      .then(() => {
        labelInput.value = '';
      })
      .catch(() => undefined);
  });

  // -- canvas pointer handling ---------------------------------------------------
  //
  // Drag from node to node creates a link; drag from a node onto empty
  // canvas moves it manually. A click (no movement) selects.

  let drag: DragState | null = null;

  function nodeIdAt(target: EventTarget | null): string | null {
    const group = (target as Element | null)?.closest?.('g[data-node]');
    return group?.getAttribute('data-node') ?? null;
  }

  function linkIdAt(target: EventTarget | null): string | null {
    const group = (target as Element | null)?.closest?.('g[data-link]');
    return group?.getAttribute('data-link') ?? null;
  }

  svg.addEventListener('mousedown', (event) => {
    const nodeId = nodeIdAt(event.target);
    if (!nodeId) return;
    drag = {
      sourceId: nodeId,
      startX: (event as MouseEvent).clientX,
      startY: (event as MouseEvent).clientY,
      moved: false,
    };
  });

  svg.addEventListener('mousemove', (event) => {
    if (!drag) return;
    const dx = (event as MouseEvent).clientX - drag.startX;
    const dy = (event as MouseEvent).clientY - drag.startY;
    if (Math.abs(dx) + Math.abs(dy) > 4) drag.moved = true;
  });

  svg.addEventListener('mouseup', (event) => {
    const current = drag;
    drag = null;
    if (!current) {
      return;
    }
    const targetNode = nodeIdAt(event.target);
    if (targetNode && targetNode !== current.sourceId) {
      void state.addLink(current.sourceId, targetNode, state.linkPolarity).catch(() => undefined);
      return;
    }
    if (!current.moved) {
      if (targetNode) {
        state.select({ type: 'node', id: targetNode });
      } else {
        const linkId = linkIdAt(event.target);
        if (linkId) state.openEvidenceDrawer(linkId);
        else state.select(null);
      }
      return;
    }
    if (targetNode === current.sourceId || !targetNode) {
      const from = state.positionOf(current.sourceId) ?? [0, 0];
      const to: [number, number] = [
        from[0] + ((event as MouseEvent).clientX - current.startX),
        from[1] + ((event as MouseEvent).clientY - current.startY),
      ];
      state.manualMove(current.sourceId, to);
    }
  });

  svg.addEventListener('click', (event) => {
    const linkId = linkIdAt(event.target);
    if (linkId) state.openEvidenceDrawer(linkId);
  });

  render();
  return { root, state, render };
}
