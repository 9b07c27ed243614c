// Editor state machine. Holds the last canonical document the service
// returned, plus everything session-local: selection, search hits, manual
// position overrides, undo/redo stacks, and the action log.
//
// The service owns the truth. Every mutation goes through the API with the
// revision we last saw, and on success the full response document replaces
// the local snapshot. Undo and redo replay inverse operations through the
// same path rather than editing locally, so the server never diverges.

import { ApiClient, ApiError, NetworkError } from './api.js';
import type { SearchFilters } from './api.js';
import type {
  DocumentJson,
  EvidenceJson,
  EvidenceKind,
  LayoutJson,
  LinkJson,
  ModelKind,
  NodeJson,
  NodeKind,
  Polarity,
  SearchHitJson,
} from './types.js';

export type Selection =
  | { type: 'node'; id: string }
  | { type: 'link'; id: string }
  | null;

export type Phase = 'creation' | 'revision' | 'retrieval';

// One entry of the session log, shaped exactly like the metrics module's
// action records so an exported log can be analysed server-side.
export interface LogEntry {
  kind: string;
  at: string;
  node_id?: string;
  link_id?: string;
  query?: string;
  old_position?: [number, number];
  new_position?: [number, number];
  phase?: Phase;
}

interface UndoEntry {
  label: string;
  undo: () => Promise<void>;
  redo: () => Promise<void>;
}

export interface NodeFields {
  kind: NodeKind;
  label: string;
  notes?: string | null;
  tags?: string[];
}

export interface EvidenceFields {
  kind: EvidenceKind;
  text: string;
  locator?: string | null;
}

function nodeIds(doc: DocumentJson): Set<string> {
  return new Set(doc.nodes.map((n) => n.id));
}

function linkIds(doc: DocumentJson): Set<string> {
  return new Set(doc.links.map((l) => l.id));
}

function createdId(before: Set<string>, after: Iterable<{ id: string }>): string {
  for (const item of after) {
    if (!before.has(item.id)) return item.id;
  }
  throw new Error('server response contains no new id');
}

// Python's datetime.fromisoformat does not accept a trailing Z, so logs
// meant for the metrics module use an explicit +00:00 offset.
function isoNow(): string {
  return new Date().toISOString().replace('Z', '+00:00');
}

export class EditorState {
  doc: DocumentJson | null = null;
  layoutResult: LayoutJson | null = null;
  selection: Selection = null;
  query = '';
  hits: SearchHitJson[] = [];
  conflict = false;
  offline = false;
  // Next-link polarity chosen in the palette.
  linkPolarity: Polarity = 'positive';
  readonly overrides = new Map<string, [number, number]>();

  private readonly undoStack: UndoEntry[] = [];
  private readonly redoStack: UndoEntry[] = [];
  private readonly log: LogEntry[] = [];
  private readonly listeners = new Set<() => void>();

  constructor(readonly api: ApiClient) {}

  // -- snapshot accessors --------------------------------------------------

  get modelId(): string {
    if (!this.doc) throw new Error('no model open');
    return this.doc.model.id;
  }

  get revision(): number {
    if (!this.doc) throw new Error('no model open');
    return this.doc.model.revision;
  }

  node(nodeId: string): NodeJson | undefined {
    return this.doc?.nodes.find((n) => n.id === nodeId);
  }

  link(linkId: string): LinkJson | undefined {
    return this.doc?.links.find((l) => l.id === linkId);
  }

  get canUndo(): boolean {
    return this.undoStack.length > 0;
  }

  get canRedo(): boolean {
    return this.redoStack.length > 0;
  }

  // Element ids the canvas should mark for the current hits. Evidence hits
  // highlight the link that owns them.
  get highlightIds(): Set<string> {
    const ids = new Set<string>();
    for (const hit of this.hits) {
      if (hit.target_type === 'evidence') {
        ids.add(hit.owner_path[1]);
      } else {
        ids.add(hit.target);
      }
    }
    return ids;
  }

  positionOf(nodeId: string): [number, number] | null {
    const override = this.overrides.get(nodeId);
    if (override) return override;
    const position = this.layoutResult?.position_of[nodeId];
    return position ? [position[0], position[1]] : null;
  }

  subscribe(listener: () => void): () => void {
    this.listeners.add(listener);
    return () => this.listeners.delete(listener);
  }

  private emit(): void {
    for (const listener of this.listeners) listener();
  }

  // -- opening and creating models -------------------------------------------

  async createModel(kind: ModelKind, title: string): Promise<string> {
    this.doc = await this.guard(() => this.api.createModel(kind, title));
    this.resetSessionState();
    this.emit();
    return this.doc.model.id;
  }

  async open(modelId: string): Promise<void> {
    this.doc = await this.guard(() => this.api.getModel(modelId));
    this.resetSessionState();
    this.emit();
  }

  // Re-fetch the server's current document after a revision conflict. Local
  // unsaved state is only the selection and overrides, which survive.
  async reload(): Promise<void> {
    this.doc = await this.guard(() => this.api.getModel(this.modelId));
    this.conflict = false;
    this.emit();
  }

  retryConnection(): void {
    this.offline = false;
    this.emit();
  }

  private resetSessionState(): void {
    this.undoStack.length = 0;
    this.redoStack.length = 0;
    this.overrides.clear();
    this.selection = null;
    this.layoutResult = null;
    this.query = '';
    this.hits = [];
    this.conflict = false;
  }

  // -- error discipline ------------------------------------------------------

  // Wraps every service call: a stale revision raises the conflict banner, a
  // network failure raises the retry banner. Neither touches local state.
  private async guard<T>(call: () => Promise<T>): Promise<T> {
    try {
      const result = await call();
      this.offline = false;
      return result;
    } catch (err) {
      if (err instanceof ApiError && err.staleRevision) {
        this.conflict = true;
        this.emit();
      } else if (err instanceof NetworkError) {
        this.offline = true;
        this.emit();
      }
      throw err;
    }
  }

  private adopt(doc: DocumentJson): void {
    this.doc = doc;
    // Drop dangling selection and overrides after structural changes.
    if (this.selection) {
      const { type, id } = this.selection;
      const present = type === 'node' ? this.node(id) : this.link(id);
      if (!present) this.selection = null;
    }
    for (const nodeId of [...this.overrides.keys()]) {
      if (!this.node(nodeId)) this.overrides.delete(nodeId);
    }
    this.emit();
  }

  private record(entry: LogEntry): void {
    this.log.push(entry);
  }

  private pushUndo(entry: UndoEntry): void {
    this.undoStack.push(entry);
    this.redoStack.length = 0;
    this.emit();
  }

  // -- primitive mutations (shared by user actions and undo/redo) -------------

  private async applyAddNode(fields: NodeFields): Promise<string> {
    const before = nodeIds(this.requireDoc());
    const doc = await this.guard(() =>
      this.api.addNode(this.modelId, this.revision, {
        kind: fields.kind,
        label: fields.label,
        notes: fields.notes ?? null,
        tags: fields.tags ?? [],
      }),
    );
    const nodeId = createdId(before, doc.nodes);
    this.adopt(doc);
    this.record({ kind: 'add_node', at: isoNow(), node_id: nodeId });
    return nodeId;
  }

  private async applyRemoveNode(nodeId: string): Promise<void> {
    const doc = await this.guard(() => this.api.deleteNode(this.modelId, this.revision, nodeId));
    this.adopt(doc);
    this.record({ kind: 'remove', at: isoNow(), node_id: nodeId });
  }

  private async applyPatchNode(nodeId: string, fields: Partial<NodeFields>): Promise<void> {
    const doc = await this.guard(() =>
      this.api.patchNode(this.modelId, this.revision, nodeId, fields),
    );
    this.adopt(doc);
    this.record({ kind: 'update', at: isoNow(), node_id: nodeId });
  }

  private async applyAddLink(
    source: string,
    target: string,
    polarity: Polarity,
    notes?: string | null,
  ): Promise<string> {
    const before = linkIds(this.requireDoc());
    const doc = await this.guard(() =>
      this.api.addLink(this.modelId, this.revision, {
        source,
        target,
        polarity,
        ...(notes != null ? { notes } : {}),
      }),
    );
    const linkId = createdId(before, doc.links);
    this.adopt(doc);
    this.record({ kind: 'add_link', at: isoNow(), link_id: linkId });
    return linkId;
  }

  private async applyRemoveLink(linkId: string): Promise<void> {
    const doc = await this.guard(() => this.api.deleteLink(this.modelId, this.revision, linkId));
    this.adopt(doc);
    this.record({ kind: 'remove', at: isoNow(), link_id: linkId });
  }

  private async applyPatchLink(
    linkId: string,
    fields: { polarity?: Polarity; notes?: string | null },
  ): Promise<void> {
    const doc = await this.guard(() =>
      this.api.patchLink(this.modelId, this.revision, linkId, fields),
    );
    this.adopt(doc);
    this.record({ kind: 'update', at: isoNow(), link_id: linkId });
  }

  private async applyAttachEvidence(linkId: string, fields: EvidenceFields): Promise<string> {
    const link = this.link(linkId);
    const before = new Set((link?.evidence ?? []).map((e) => e.id));
    const doc = await this.guard(() =>
      this.api.attachEvidence(this.modelId, this.revision, linkId, {
        kind: fields.kind,
        text: fields.text,
        locator: fields.locator ?? null,
      }),
    );
    const updated = doc.links.find((l) => l.id === linkId);
    const evidenceId = createdId(before, updated?.evidence ?? []);
    this.adopt(doc);
    this.record({ kind: 'attach_evidence', at: isoNow(), link_id: linkId });
    return evidenceId;
  }

  private async applyDetachEvidence(linkId: string, evidenceId: string): Promise<void> {
    const doc = await this.guard(() =>
      this.api.detachEvidence(this.modelId, this.revision, linkId, evidenceId),
    );
    this.adopt(doc);
    this.record({ kind: 'remove', at: isoNow(), link_id: linkId });
  }

  private requireDoc(): DocumentJson {
    if (!this.doc) throw new Error('no model open');
    return this.doc;
  }

  // -- user-facing operations --------------------------------------------------

  async addNode(fields: NodeFields): Promise<string> {
    const id = await this.applyAddNode(fields);
    const binding = { id };
    this.pushUndo({
      label: 'add node',
      undo: () => this.applyRemoveNode(binding.id),
      redo: async () => {
        binding.id = await this.applyAddNode(fields);
      },
    });
    return id;
  }

  async updateNode(nodeId: string, fields: Partial<NodeFields>): Promise<void> {
    const node = this.node(nodeId);
    if (!node) throw new Error(`unknown node ${nodeId}`);
    const previous: Partial<NodeFields> = {
      kind: node.kind,
      label: node.label,
      notes: node.notes,
      tags: [...node.tags],
    };
    await this.applyPatchNode(nodeId, fields);
    this.pushUndo({
      label: 'edit node',
      undo: () => this.applyPatchNode(nodeId, previous),
      redo: () => this.applyPatchNode(nodeId, fields),
    });
  }

  async removeNode(nodeId: string): Promise<void> {
    const doc = this.requireDoc();
    const node = doc.nodes.find((n) => n.id === nodeId);
    if (!node) throw new Error(`unknown node ${nodeId}`);
    const snapshot: NodeJson = { ...node, tags: [...node.tags] };
    const touching: LinkJson[] = doc.links
      .filter((l) => l.source === nodeId || l.target === nodeId)
      .map((l) => ({ ...l, evidence: l.evidence.map((e) => ({ ...e })) }));
    const binding = { id: nodeId };
    await this.applyRemoveNode(nodeId);
    this.pushUndo({
      label: 'remove node',
      // Recreation gets fresh server ids; links are rewired to the new one.
      undo: async () => {
        binding.id = await this.applyAddNode(snapshot);
        for (const link of touching) {
          const source = link.source === nodeId ? binding.id : link.source;
          const target = link.target === nodeId ? binding.id : link.target;
          const newLinkId = await this.applyAddLink(source, target, link.polarity, link.notes);
          for (const e of link.evidence) {
            await this.applyAttachEvidence(newLinkId, e);
          }
        }
      },
      redo: () => this.applyRemoveNode(binding.id),
    });
  }

  async addLink(source: string, target: string, polarity: Polarity, notes?: string | null): Promise<string> {
    const id = await this.applyAddLink(source, target, polarity, notes);
    const binding = { id };
    this.pushUndo({
      label: 'add link',
      undo: () => this.applyRemoveLink(binding.id),
      redo: async () => {
        binding.id = await this.applyAddLink(source, target, polarity, notes);
      },
    });
    return id;
  }

  async updateLink(linkId: string, fields: { polarity?: Polarity; notes?: string | null }): Promise<void> {
    const link = this.link(linkId);
    if (!link) throw new Error(`unknown link ${linkId}`);
    const previous = { polarity: link.polarity, notes: link.notes };
    await this.applyPatchLink(linkId, fields);
    this.pushUndo({
      label: 'edit link',
      undo: () => this.applyPatchLink(linkId, previous),
      redo: () => this.applyPatchLink(linkId, fields),
    });
  }

  togglePolarity(linkId: string): Promise<void> {
    const link = this.link(linkId);
    if (!link) throw new Error(`unknown link ${linkId}`);
    return this.updateLink(linkId, {
      polarity: link.polarity === 'positive' ? 'negative' : 'positive',
    });
  }

  async removeLink(linkId: string): Promise<void> {
    const link = this.link(linkId);
    if (!link) throw new Error(`unknown link ${linkId}`);
    const snapshot: LinkJson = { ...link, evidence: link.evidence.map((e) => ({ ...e })) };
    const binding = { id: linkId };
    await this.applyRemoveLink(linkId);
    this.pushUndo({
      label: 'remove link',
      undo: async () => {
        binding.id = await this.applyAddLink(
          snapshot.source,
          snapshot.target,
          snapshot.polarity,
          snapshot.notes,
        );
        for (const e of snapshot.evidence) {
          await this.applyAttachEvidence(binding.id, e);
        }
      },
      redo: () => this.applyRemoveLink(binding.id),
    });
  }

  async attachEvidence(linkId: string, fields: EvidenceFields): Promise<string> {
    const id = await this.applyAttachEvidence(linkId, fields);
    const binding = { id };
    this.pushUndo({
      label: 'attach evidence',
      undo: () => this.applyDetachEvidence(linkId, binding.id),
      redo: async () => {
        binding.id = await this.applyAttachEvidence(linkId, fields);
      },
    });
    return id;
  }

  async detachEvidence(linkId: string, evidenceId: string): Promise<void> {
    const link = this.link(linkId);
    const item = link?.evidence.find((e) => e.id === evidenceId);
    if (!item) throw new Error(`unknown evidence ${evidenceId}`);
    const snapshot: EvidenceJson = { ...item };
    const binding = { id: evidenceId };
    await this.applyDetachEvidence(linkId, evidenceId);
    this.pushUndo({
      label: 'detach evidence',
      undo: async () => {
        binding.id = await this.applyAttachEvidence(linkId, snapshot);
      },
      redo: () => this.applyDetachEvidence(linkId, binding.id),
    });
  }

  async undo(): Promise<void> {
    const entry = this.undoStack.pop();
    if (!entry) return;
    try {
      await entry.undo();
    } catch (err) {
      this.undoStack.push(entry);
      throw err;
    }
    this.redoStack.push(entry);
    this.emit();
  }

  async redo(): Promise<void> {
    const entry = this.redoStack.pop();
    if (!entry) return;
    try {
      await entry.redo();
    } catch (err) {
      this.redoStack.push(entry);
      throw err;
    }
    this.undoStack.push(entry);
    this.emit();
  }

  // -- layout, search, selection -------------------------------------------------

  // Geometry always comes from the service; the canvas only draws it.
  async autoLayout(incremental = true): Promise<LayoutJson> {
    const result = await this.guard(() => this.api.layout(this.modelId, incremental));
    this.layoutResult = result;
    this.overrides.clear();
    this.record({ kind: 'auto_layout', at: isoNow() });
    this.emit();
    return result;
  }

  async runSearch(q: string, filters: SearchFilters = {}): Promise<SearchHitJson[]> {
    const result = await this.guard(() => this.api.search(this.modelId, q, filters));
    this.query = q;
    this.hits = result.hits;
    this.record({ kind: 'search', at: isoNow(), query: q });
    this.emit();
    return result.hits;
  }

  clearSearch(): void {
    this.query = '';
    this.hits = [];
    this.emit();
  }

  select(selection: Selection): void {
    this.selection = selection;
    this.emit();
  }

  openEvidenceDrawer(linkId: string): void {
    this.selection = { type: 'link', id: linkId };
    this.record({ kind: 'open_evidence', at: isoNow(), link_id: linkId });
    this.emit();
  }

  // Manual drags are session-local overrides; the next auto-layout discards
  // them. They still count as repositioning effort in the log.
  manualMove(nodeId: string, to: [number, number]): void {
    const from = this.positionOf(nodeId) ?? [0, 0];
    this.overrides.set(nodeId, to);
    this.record({
      kind: 'manual_move',
      at: isoNow(),
      node_id: nodeId,
      old_position: [from[0], from[1]],
      new_position: [to[0], to[1]],
    });
    this.emit();
  }

  startPhase(phase: Phase): void {
    this.record({ kind: 'phase_start', at: isoNow(), phase });
  }

  endPhase(phase: Phase): void {
    this.record({ kind: 'phase_end', at: isoNow(), phase });
  }

  sessionLog(): { actions: LogEntry[] } {
    return { actions: this.log.map((entry) => ({ ...entry })) };
  }

  exportSessionLog(): string {
    return JSON.stringify(this.sessionLog(), null, 2) + '\n';
  }
}
