// Minimal in-memory stand-in for the service, used by DOM tests so they can
// exercise the full click-to-request-to-render loop without a subprocess.
// Honors If-Match with stale_revision errors, mirrors the response bodies,
// and can be told to fail like a dead network.

import type {
  DocumentJson,
  EvidenceJson,
  LayoutJson,
  LinkJson,
  NodeJson,
  SearchHitJson,
} from '../src/types.js';

function json(body: unknown, status = 200): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { 'Content-Type': 'application/json' },
  });
}

function errorBody(status: number, code: string, detail: string): Response {
  return json({ status, code, detail, offending_id: null }, status);
}

export class FakeBackend {
  doc: DocumentJson | null = null;
  failNextWith: 'network' | null = null;
  private counter = 0;

  private nextId(prefix: string): string {
    this.counter += 1;
    return `${prefix}${this.counter}`;
  }

  fetch = async (input: RequestInfo | URL, init?: RequestInit): Promise<Response> => {
    if (this.failNextWith === 'network') {
      this.failNextWith = null;
      throw new TypeError('fetch failed');
    }
    const url = new URL(String(input));
    const method = init?.method ?? 'GET';
    const parts = url.pathname.split('/').filter(Boolean);
    const body = typeof init?.body === 'string' ? JSON.parse(init.body) : undefined;
    const headers = (init?.headers ?? {}) as Record<string, string>;

    if (parts[0] !== 'models') return errorBody(404, 'not_found', 'unknown route');

    if (parts.length === 1) {
      if (method === 'GET') {
        const rows = this.doc
          ? [{ id: this.doc.model.id, kind: this.doc.model.kind, title: this.doc.model.title, revision: this.doc.model.revision }]
          : [];
        return json({ models: rows });
      }
      if (method === 'POST') {
        this.doc = {
          schema_version: 'dreams/1',
          model: { id: this.nextId('M'), kind: body.kind, title: body.title, revision: 0 },
          nodes: [],
          links: [],
        };
        return json(this.doc, 201);
      }
    }

    if (!this.doc || parts[1] !== this.doc.model.id) {
      return errorBody(404, 'not_found', 'no such model');
    }
    const doc = this.doc;

    if (parts.length === 2 && method === 'GET') return json(doc);

    if (parts.length === 3 && parts[2] === 'layout' && method === 'GET') {
      return json(this.layout());
    }
    if (parts.length === 3 && parts[2] === 'search' && method === 'GET') {
      return json({ revision: doc.model.revision, hits: this.search(url.searchParams.get('q') ?? '') });
    }

    // Everything below mutates and must carry the current revision.
    const revision = Number(headers['If-Match'] ?? 'NaN');
    if (Number.isNaN(revision)) {
      return errorBody(400, 'malformed_body', 'missing If-Match');
    }
    if (revision !== doc.model.revision) {
      return errorBody(409, 'stale_revision', `expected revision ${revision}, document is at ${doc.model.revision}`);
    }

    if (parts[2] === 'nodes') {
      if (method === 'POST') {
        const node: NodeJson = {
          id: this.nextId('n'),
          kind: body.kind,
          label: body.label,
          notes: body.notes ?? null,
          tags: body.tags ?? [],
        };
        doc.nodes.push(node);
        return this.bumped(201);
      }
      const node = doc.nodes.find((n) => n.id === parts[3]);
      if (!node) return errorBody(404, 'not_found', 'no such node');
      if (method === 'PATCH') {
        if (body.kind !== undefined) node.kind = body.kind;
        if (body.label !== undefined && body.label !== null) node.label = body.label;
        if (body.notes !== undefined) node.notes = body.notes;
        if (body.tags !== undefined && body.tags !== null) node.tags = body.tags;
        return this.bumped();
      }
      if (method === 'DELETE') {
        doc.nodes = doc.nodes.filter((n) => n.id !== node.id);
        doc.links = doc.links.filter((l) => l.source !== node.id && l.target !== node.id);
        return this.bumped();
      }
    }

    if (parts[2] === 'links') {
      if (parts.length === 3 && method === 'POST') {
        const link: LinkJson = {
          id: this.nextId('l'),
          source: body.source,
          target: body.target,
          polarity: body.polarity,
          notes: body.notes ?? null,
          evidence: [],
        };
        doc.links.push(link);
        return this.bumped(201);
      }
      const link = doc.links.find((l) => l.id === parts[3]);
      if (!link) return errorBody(404, 'not_found', 'no such link');
      if (parts.length === 4 && method === 'PATCH') {
        if (body.polarity !== undefined) link.polarity = body.polarity;
        if (body.notes !== undefined) link.notes = body.notes;
        return this.bumped();
      }
      if (parts.length === 4 && method === 'DELETE') {
        doc.links = doc.links.filter((l) => l.id !== link.id);
        return this.bumped();
      }
      if (parts[4] === 'evidence') {
        if (method === 'POST') {
          const item: EvidenceJson = {
            id: this.nextId('e'),
            kind: body.kind,
            text: body.text,
            locator: body.locator ?? null,
            created_at: '2024-06-01T10:00:00Z',
          };
          link.evidence.push(item);
          return this.bumped(201);
        }
        if (method === 'DELETE') {
          link.evidence = link.evidence.filter((e) => e.id !== parts[5]);
          return this.bumped();
        }
      }
    }

    return errorBody(404, 'not_found', 'unknown route');
  };

  private bumped(status = 200): Response {
    this.doc!.model.revision += 1;
    return json(this.doc, status);
  }

  // Fabricated geometry: a diagonal so every node gets a distinct position.
  private layout(): LayoutJson {
    const doc = this.doc!;
    const layer_of: Record<string, number> = {};
    const order_of: Record<string, number> = {};
    const position_of: Record<string, [number, number]> = {};
    doc.nodes.forEach((node, i) => {
      layer_of[node.id] = i;
      order_of[node.id] = 0;
      position_of[node.id] = [60 + i * 40, 40 + i * 90];
    });
    const routes: Record<string, [number, number][]> = {};
    for (const link of doc.links) {
      routes[link.id] = [position_of[link.source], position_of[link.target]];
    }
    return {
      layer_of,
      order_of,
      position_of,
      routes,
      reversed_links: [],
      crossing_count: 0,
      revision: doc.model.revision,
    };
  }

  private search(q: string): SearchHitJson[] {
    const doc = this.doc!;
    const needle = q.toLowerCase();
    const hits: SearchHitJson[] = [];
    if (!needle) return hits;
    for (const node of doc.nodes) {
      const at = node.label.toLowerCase().indexOf(needle);
      if (at >= 0) {
        hits.push({
          target: node.id,
          target_type: 'node',
          owner_path: [doc.model.id, node.id],
          matched_field: 'label',
          score: 2,
          snippet: { text: node.label, spans: [[at, at + needle.length]] },
        });
      }
    }
    for (const link of doc.links) {
      for (const item of link.evidence) {
        const at = item.text.toLowerCase().indexOf(needle);
        if (at >= 0) {
          hits.push({
            target: item.id,
            target_type: 'evidence',
            owner_path: [doc.model.id, link.id, item.id],
            matched_field: 'evidence_text',
            score: 1,
            snippet: { text: item.text, spans: [[at, at + needle.length]] },
          });
        }
      }
    }
    return hits;
  }
}
