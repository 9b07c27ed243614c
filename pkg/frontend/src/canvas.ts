// SVG canvas renderer. Draws the same visual language as the server's SVG
// export (fill palette, dashed negative links, sign glyphs, evidence badges)
// but at interactive size, and reconciles elements in place so CSS
// transitions can animate nodes to new layout positions.

import type { DocumentJson, LayoutJson, NodeKind, SearchHitJson } from './types.js';
import type { Selection } from './state.js';

export const NODE_FILL: Record<NodeKind, string> = {
  influencing_factor: '#cfe2f3',
  success_factor: '#d9ead3',
  key_factor: '#ffe599',
  assumption_node: '#fff2cc',
};

export const NODE_W = 132;
export const NODE_H = 44;
const SCALE = 2.4;
const MARGIN = 90;
const SVG_NS = 'http://www.w3.org/2000/svg';

export const POSITIVE_GLYPH = '+';
export const NEGATIVE_GLYPH = '−';

export interface CanvasView {
  highlights?: Set<string>;
  selection?: Selection;
  overrides?: Map<string, [number, number]>;
  animate?: boolean;
}

interface Transform {
  tx(p: [number, number]): [number, number];
  width: number;
  height: number;
}

function makeTransform(layout: LayoutJson | null): Transform {
  const points: [number, number][] = [];
  if (layout) {
    points.push(...Object.values(layout.position_of));
    for (const route of Object.values(layout.routes)) points.push(...route);
  }
  if (points.length === 0) points.push([0, 0]);
  const minX = Math.min(...points.map((p) => p[0]));
  const minY = Math.min(...points.map((p) => p[1]));
  const maxX = Math.max(...points.map((p) => p[0]));
  const maxY = Math.max(...points.map((p) => p[1]));
  return {
    tx: (p) => [MARGIN + (p[0] - minX) * SCALE, MARGIN + (p[1] - minY) * SCALE],
    width: 2 * MARGIN + (maxX - minX) * SCALE,
    height: 2 * MARGIN + (maxY - minY) * SCALE,
  };
}

function el(tag: string, attrs: Record<string, string> = {}): SVGElement {
  const element = document.createElementNS(SVG_NS, tag) as SVGElement;
  for (const [key, value] of Object.entries(attrs)) element.setAttribute(key, value);
  return element;
}

function setAttrs(element: Element, attrs: Record<string, string>): void {
  for (const [key, value] of Object.entries(attrs)) element.setAttribute(key, value);
}

function ensureLayer(svg: SVGSVGElement, id: string): SVGGElement {
  let layer = svg.querySelector<SVGGElement>(`#${id}`);
  if (!layer) {
    layer = el('g', { id }) as SVGGElement;
    svg.appendChild(layer);
  }
  return layer;
}

function ensureDefs(svg: SVGSVGElement): void {
  if (svg.querySelector('defs')) return;
  const defs = el('defs');
  const marker = el('marker', {
    id: 'arrow',
    viewBox: '0 0 10 10',
    refX: '9',
    refY: '5',
    markerWidth: '7',
    markerHeight: '7',
    orient: 'auto-start-reverse',
  });
  marker.appendChild(el('path', { d: 'M 0 0 L 10 5 L 0 10 z', fill: '#444444' }));
  defs.appendChild(marker);
  svg.appendChild(defs);
}

function midpoint(pts: [number, number][]): [number, number] {
  if (pts.length % 2 === 1) return pts[(pts.length - 1) / 2];
  const a = pts[pts.length / 2 - 1];
  const b = pts[pts.length / 2];
  return [(a[0] + b[0]) / 2, (a[1] + b[1]) / 2];
}

// Element id on the canvas that a search hit should light up. Evidence
// lives inside a link's drawer, so its hit lands on the owning link.
export function hitElementId(hit: SearchHitJson): string {
  if (hit.target_type === 'evidence') return `link-${hit.owner_path[1]}`;
  if (hit.target_type === 'link') return `link-${hit.target}`;
  return `node-${hit.target}`;
}

export function scrollFirstHitIntoView(svg: SVGSVGElement, hits: SearchHitJson[]): Element | null {
  if (hits.length === 0) return null;
  const element = svg.querySelector(`[id="${hitElementId(hits[0])}"]`);
  if (element && typeof (element as HTMLElement).scrollIntoView === 'function') {
    (element as HTMLElement).scrollIntoView({ behavior: 'smooth', block: 'center' });
  }
  return element;
}

function nodeShape(kind: NodeKind): SVGElement[] {
  const fill = NODE_FILL[kind];
  const x = -NODE_W / 2;
  const y = -NODE_H / 2;
  if (kind === 'success_factor') {
    return [
      el('ellipse', {
        class: 'shape',
        cx: '0',
        cy: '0',
        rx: String(NODE_W / 2),
        ry: String(NODE_H / 2),
        fill,
        stroke: '#333333',
        'stroke-width': '1.5',
      }),
    ];
  }
  const rect = el('rect', {
    class: 'shape',
    x: String(x),
    y: String(y),
    width: String(NODE_W),
    height: String(NODE_H),
    rx: '3',
    fill,
    stroke: '#333333',
    'stroke-width': kind === 'key_factor' ? '3' : '1.5',
  });
  if (kind === 'assumption_node') {
    rect.setAttribute('stroke-dasharray', '4 3');
    const fold = el('path', {
      class: 'fold',
      d: `M ${NODE_W / 2 - 14} ${y} L ${NODE_W / 2} ${y + 14} L ${NODE_W / 2 - 14} ${y + 14} z`,
      fill: '#ffffff',
      stroke: '#333333',
      'stroke-width': '1',
    });
    return [rect, fold];
  }
  if (kind === 'key_factor') {
    const inner = el('rect', {
      class: 'inner',
      x: String(x + 4),
      y: String(y + 4),
      width: String(NODE_W - 8),
      height: String(NODE_H - 8),
      rx: '2',
      fill: 'none',
      stroke: '#333333',
      'stroke-width': '1',
    });
    return [rect, inner];
  }
  return [rect];
}

function renderNode(
  layer: SVGGElement,
  node: DocumentJson['nodes'][number],
  position: [number, number],
  view: CanvasView,
): void {
  const id = `node-${node.id}`;
  let group = layer.querySelector<SVGGElement>(`[id="${id}"]`);
  if (!group || group.getAttribute('data-kind') !== node.kind) {
    group?.remove();
    group = el('g', { id, 'data-node': node.id, 'data-kind': node.kind }) as SVGGElement;
    for (const shape of nodeShape(node.kind)) group.appendChild(shape);
    const label = el('text', {
      class: 'label',
      x: '0',
      y: '4',
      'text-anchor': 'middle',
      'font-size': '12',
      'font-family': 'sans-serif',
      fill: '#111111',
    });
    group.appendChild(label);
    layer.appendChild(group);
  }
  const label = group.querySelector('.label');
  if (label) label.textContent = node.label;
  group.style.transition = view.animate ? 'transform 300ms ease' : 'none';
  group.setAttribute('transform', `translate(${position[0]}, ${position[1]})`);
  const classes = ['node', `kind-${node.kind}`];
  if (view.highlights?.has(node.id)) classes.push('hit');
  if (view.selection?.type === 'node' && view.selection.id === node.id) classes.push('selected');
  group.setAttribute('class', classes.join(' '));
}

function renderLink(
  layer: SVGGElement,
  link: DocumentJson['links'][number],
  points: [number, number][],
  view: CanvasView,
): void {
  const id = `link-${link.id}`;
  let group = layer.querySelector<SVGGElement>(`[id="${id}"]`);
  if (!group) {
    group = el('g', { id, 'data-link': link.id }) as SVGGElement;
    group.appendChild(el('path', { class: 'hitarea', fill: 'none', stroke: 'transparent', 'stroke-width': '14' }));
    group.appendChild(el('path', { class: 'edge', fill: 'none', stroke: '#444444', 'stroke-width': '1.5', 'marker-end': 'url(#arrow)' }));
    group.appendChild(el('text', { class: 'glyph', 'font-size': '14', 'font-family': 'sans-serif', fill: '#222222' }));
    layer.appendChild(group);
  }
  const d = 'M ' + points.map((p) => `${p[0].toFixed(2)},${p[1].toFixed(2)}`).join(' L ');
  const edge = group.querySelector('.edge')!;
  const hitarea = group.querySelector('.hitarea')!;
  setAttrs(edge, { d });
  setAttrs(hitarea, { d });
  if (link.polarity === 'negative') {
    edge.setAttribute('stroke-dasharray', '6 4');
  } else {
    edge.removeAttribute('stroke-dasharray');
  }
  const mid = midpoint(points);
  const glyph = group.querySelector('.glyph')!;
  setAttrs(glyph, { x: (mid[0] + 6).toFixed(2), y: (mid[1] - 4).toFixed(2) });
  glyph.textContent = link.polarity === 'positive' ? POSITIVE_GLYPH : NEGATIVE_GLYPH;

  let badge = group.querySelector<SVGGElement>('.badge');
  if (link.evidence.length > 0) {
    if (!badge) {
      badge = el('g', { class: 'badge' }) as SVGGElement;
      badge.appendChild(el('circle', { r: '9', fill: '#666666' }));
      badge.appendChild(el('text', {
        class: 'count',
        'font-size': '10',
        'font-family': 'sans-serif',
        fill: '#ffffff',
        'text-anchor': 'middle',
        dy: '3',
      }));
      group.appendChild(badge);
    }
    setAttrs(badge.querySelector('circle')!, { cx: (mid[0] - 12).toFixed(2), cy: (mid[1] + 10).toFixed(2) });
    setAttrs(badge.querySelector('.count')!, { x: (mid[0] - 12).toFixed(2), y: (mid[1] + 10).toFixed(2) });
    badge.querySelector('.count')!.textContent = String(link.evidence.length);
  } else {
    badge?.remove();
  }

  const classes = ['link', `polarity-${link.polarity}`];
  if (view.highlights?.has(link.id)) classes.push('hit');
  if (view.selection?.type === 'link' && view.selection.id === link.id) classes.push('selected');
  group.setAttribute('class', classes.join(' '));
}

// Fallback geometry before the first auto-layout: a simple grid. The UI
// never computes a real layout; this is just somewhere to put new nodes.
function gridPositions(doc: DocumentJson): Map<string, [number, number]> {
  const positions = new Map<string, [number, number]>();
  const columns = Math.max(1, Math.ceil(Math.sqrt(doc.nodes.length)));
  doc.nodes.forEach((node, i) => {
    positions.set(node.id, [
      MARGIN + (i % columns) * (NODE_W + 60),
      MARGIN + Math.floor(i / columns) * (NODE_H + 70),
    ]);
  });
  return positions;
}

export function renderCanvas(
  svg: SVGSVGElement,
  doc: DocumentJson,
  layout: LayoutJson | null,
  view: CanvasView = {},
): void {
  ensureDefs(svg);
  const linksLayer = ensureLayer(svg, 'links-layer');
  const nodesLayer = ensureLayer(svg, 'nodes-layer');

  const transform = makeTransform(layout);
  const fallback = layout ? null : gridPositions(doc);

  const positions = new Map<string, [number, number]>();
  for (const node of doc.nodes) {
    const override = view.overrides?.get(node.id);
    if (override) {
      positions.set(node.id, override);
    } else if (layout && layout.position_of[node.id]) {
      positions.set(node.id, transform.tx(layout.position_of[node.id]));
    } else if (fallback) {
      positions.set(node.id, fallback.get(node.id)!);
    }
  }

  let width = transform.width;
  let height = transform.height;
  for (const [x, y] of positions.values()) {
    width = Math.max(width, x + NODE_W);
    height = Math.max(height, y + NODE_H);
  }
  setAttrs(svg, {
    width: String(Math.ceil(width)),
    height: String(Math.ceil(height)),
    viewBox: `0 0 ${Math.ceil(width)} ${Math.ceil(height)}`,
  });

  const wantedLinks = new Set(doc.links.map((l) => `link-${l.id}`));
  for (const existing of [...linksLayer.children]) {
    if (!wantedLinks.has(existing.id)) existing.remove();
  }
  for (const link of doc.links) {
    let points: [number, number][];
    const route = layout?.routes[link.id];
    if (route && !view.overrides?.has(link.source) && !view.overrides?.has(link.target)) {
      points = route.map((p) => transform.tx(p));
    } else {
      const from = positions.get(link.source);
      const to = positions.get(link.target);
      if (!from || !to) continue;
      points = [from, to];
    }
    renderLink(linksLayer, link, points, view);
  }

  const wantedNodes = new Set(doc.nodes.map((n) => `node-${n.id}`));
  for (const existing of [...nodesLayer.children]) {
    if (!wantedNodes.has(existing.id)) existing.remove();
  }
  for (const node of doc.nodes) {
    const position = positions.get(node.id);
    if (position) renderNode(nodesLayer, node, position, view);
  }
}
