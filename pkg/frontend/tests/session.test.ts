// Integration tests against the real service. The headless replay drives
// the editor state machine through the exact construction the CLI fixture
// script performs, then compares the stored files byte for byte.

import { execFile } from 'node:child_process';
import { mkdtemp, readFile, rm, writeFile } from 'node:fs/promises';
import { tmpdir } from 'node:os';
import { dirname, join } from 'node:path';
import { fileURLToPath } from 'node:url';
import { promisify } from 'node:util';
import { afterAll, beforeAll, describe, expect, it } from 'vitest';

import { ApiClient, ApiError, NetworkError } from '../src/api.js';
import { EditorState } from '../src/state.js';
import type { DocumentJson, EvidenceKind, NodeKind, Polarity } from '../src/types.js';
import { startServer, type TestServer } from './server.js';

const execFileP = promisify(execFile);
const here = dirname(fileURLToPath(import.meta.url));
const FIXTURE_SCRIPT = join(here, 'fixture_cli.py');
const SEED = 424242;

interface Plan {
  file: string;
  model_id: string;
  model_kind: 'reference_model' | 'impact_model';
  title: string;
  nodes: [NodeKind, string][];
  links: [number, number, Polarity][];
  evidence: [number, EvidenceKind, string, string | null][];
}

async function replayPlan(
  state: EditorState,
  plan: Plan,
): Promise<{ nodeIds: string[]; linkIds: string[] }> {
  await state.createModel(plan.model_kind, plan.title);
  const nodeIds: string[] = [];
  for (const [kind, label] of plan.nodes) {
    nodeIds.push(await state.addNode({ kind, label }));
  }
  const linkIds: string[] = [];
  for (const [source, target, polarity] of plan.links) {
    linkIds.push(await state.addLink(nodeIds[source], nodeIds[target], polarity));
  }
  for (const [linkIndex, kind, text, locator] of plan.evidence) {
    await state.attachEvidence(linkIds[linkIndex], { kind, text, locator });
  }
  return { nodeIds, linkIds };
}

// Structure-only view of a document: ids and timestamps are assigned by the
// server, so recreation through undo keeps content but not identifiers.
function strippedDoc(doc: DocumentJson) {
  const labelOf = new Map(doc.nodes.map((n) => [n.id, n.label]));
  return {
    title: doc.model.title,
    nodes: doc.nodes
      .map((n) => ({ kind: n.kind, label: n.label, notes: n.notes, tags: n.tags }))
      .sort((a, b) => a.label.localeCompare(b.label)),
    links: doc.links
      .map((l) => ({
        source: labelOf.get(l.source),
        target: labelOf.get(l.target),
        polarity: l.polarity,
        notes: l.notes,
        evidence: l.evidence.map((e) => ({ kind: e.kind, text: e.text, locator: e.locator })),
      }))
      .sort((a, b) => `${a.source}>${a.target}`.localeCompare(`${b.source}>${b.target}`)),
  };
}

describe('headless construction replay', () => {
  it('produces a file byte-identical to the CLI fixture', async () => {
    const scratch = await mkdtemp(join(tmpdir(), 'dreams-fixture-'));
    const server = await startServer({ seed: SEED });
    try {
      const fixturePath = join(scratch, 'fixture.dreams.json');
      const { stdout } = await execFileP('python3', [FIXTURE_SCRIPT, '--out', fixturePath], {
        env: { ...process.env, DREAMS_SEED: String(SEED) },
      });
      const plan = JSON.parse(stdout) as Plan;
      expect(plan.nodes.length).toBe(15);
      expect(plan.links.length).toBe(20);
      expect(plan.evidence.length).toBe(11);
      const fixtureBytes = await readFile(fixturePath, 'utf8');

      const state = new EditorState(new ApiClient(server.base));
      state.startPhase('creation');
      await replayPlan(state, plan);
      state.endPhase('creation');

      expect(state.modelId).toBe(plan.model_id);
      const uiBytes = await readFile(join(server.dataDir, `${state.modelId}.dreams.json`), 'utf8');
      expect(uiBytes).toBe(fixtureBytes);

      const served = await state.api.getModel(state.modelId);
      expect(served).toEqual(JSON.parse(fixtureBytes));

      const validated = await execFileP('python3', [
        '-m', 'dreams.cli', 'validate',
        '--file', join(server.dataDir, `${state.modelId}.dreams.json`),
      ]);
      expect(validated.stdout.trim()).toBe('ok');
    } finally {
      await server.stop();
      await rm(scratch, { recursive: true, force: true });
    }
  });
});

describe('editor against a live service', () => {
  let server: TestServer;
  let api: ApiClient;

  beforeAll(async () => {
    server = await startServer();
    api = new ApiClient(server.base);
  });

  afterAll(async () => {
    await server.stop();
  });

  async function smallModel(state: EditorState): Promise<{ a: string; b: string; link: string }> {
    await state.createModel('reference_model', 'Scratch model');
    const a = await state.addNode({ kind: 'influencing_factor', label: 'Budget pressure' });
    const b = await state.addNode({ kind: 'success_factor', label: 'Release confidence' });
    const link = await state.addLink(a, b, 'negative');
    return { a, b, link };
  }

  it('round-trips evidence through the drawer operations', async () => {
    const state = new EditorState(api);
    const { link } = await smallModel(state);

    const evidenceId = await state.attachEvidence(link, {
      kind: 'reference',
      text: 'Cost cutting review notes',
      locator: 'review.md',
    });
    let stored = state.link(link)!.evidence;
    expect(stored.length).toBe(1);
    expect(stored[0].id).toBe(evidenceId);
    expect(stored[0].kind).toBe('reference');
    expect(stored[0].text).toBe('Cost cutting review notes');
    expect(stored[0].locator).toBe('review.md');

    await state.detachEvidence(link, evidenceId);
    expect(state.link(link)!.evidence.length).toBe(0);

    // Undo of the detach re-attaches the same content under a fresh id.
    await state.undo();
    stored = state.link(link)!.evidence;
    expect(stored.length).toBe(1);
    expect(stored[0].kind).toBe('reference');
    expect(stored[0].text).toBe('Cost cutting review notes');
    expect(stored[0].locator).toBe('review.md');

    await state.redo();
    expect(state.link(link)!.evidence.length).toBe(0);

    // Every step above was accepted by the server, not just applied locally.
    const served = await api.getModel(state.modelId);
    expect(served).toEqual(state.doc);
  });

  it('maps search hits to canvas highlight targets', async () => {
    const state = new EditorState(api);
    const { a, b, link } = await smallModel(state);
    await state.attachEvidence(link, {
      kind: 'assumption',
      text: 'Budget cycles repeat yearly',
      locator: null,
    });

    const hits = await state.runSearch('budget');
    expect(hits.length).toBeGreaterThanOrEqual(2);

    const independent = await api.search(state.modelId, 'budget');
    expect(hits).toEqual(independent.hits);

    const expected = new Set<string>();
    for (const hit of independent.hits) {
      if (hit.target_type === 'evidence') {
        expect(hit.owner_path[1]).toBe(link);
        expected.add(hit.owner_path[1]);
      } else {
        expected.add(hit.target);
      }
    }
    expect(state.highlightIds).toEqual(expected);
    expect(state.highlightIds.has(a)).toBe(true);
    expect(state.highlightIds.has(link)).toBe(true);
    expect(state.highlightIds.has(b)).toBe(false);
  });

  it('restores the pre-undo snapshot after undo then redo', async () => {
    const state = new EditorState(api);
    const { link } = await smallModel(state);

    // Field edits keep ids, so the restored snapshot is exact except for
    // the revision counter, which records the round trip and only grows.
    await state.updateLink(link, { polarity: 'positive' });
    const afterPatch = structuredClone(state.doc)!;
    await state.undo();
    expect(state.link(link)!.polarity).toBe('negative');
    await state.redo();
    const restored = structuredClone(state.doc)!;
    expect(restored.model.revision).toBe(afterPatch.model.revision + 2);
    restored.model.revision = afterPatch.model.revision;
    expect(restored).toEqual(afterPatch);

    // Deleting and recreating goes through the server, which assigns new
    // ids; the snapshot comparison is on content.
    const c = await state.addNode({ kind: 'key_factor', label: 'Scope discipline' });
    await state.addLink(c, state.link(link)!.target, 'positive');
    const beforeRemove = strippedDoc(state.doc!);
    await state.removeNode(c);
    await state.undo();
    expect(strippedDoc(state.doc!)).toEqual(beforeRemove);
    await state.redo();
    expect(state.doc!.nodes.find((n) => n.label === 'Scope discipline')).toBeUndefined();
    await state.undo();
    expect(strippedDoc(state.doc!)).toEqual(beforeRemove);

    const served = await api.getModel(state.modelId);
    expect(served).toEqual(state.doc);
  });

  it('raises the conflict banner on a stale revision and recovers via reload', async () => {
    const first = new EditorState(api);
    await smallModel(first);
    const second = new EditorState(api);
    await second.open(first.modelId);

    await first.addNode({ kind: 'influencing_factor', label: 'Vendor lock in' });

    const revisionBefore = second.revision;
    const nodesBefore = second.doc!.nodes.length;
    await expect(
      second.addNode({ kind: 'influencing_factor', label: 'Shadow processes' }),
    ).rejects.toSatisfy((err: unknown) => err instanceof ApiError && err.staleRevision);
    expect(second.conflict).toBe(true);
    expect(second.revision).toBe(revisionBefore);
    expect(second.doc!.nodes.length).toBe(nodesBefore);

    await second.reload();
    expect(second.conflict).toBe(false);
    expect(second.revision).toBe(first.revision);

    await second.addNode({ kind: 'influencing_factor', label: 'Shadow processes' });
    expect(second.conflict).toBe(false);
  });

  it('raises the retry banner on network failure and preserves local state', async () => {
    const state = new EditorState(api);
    await smallModel(state);

    const dead = new EditorState(new ApiClient('http://127.0.0.1:9'));
    dead.doc = structuredClone(state.doc);
    const before = structuredClone(dead.doc);

    await expect(
      dead.addNode({ kind: 'influencing_factor', label: 'Unreachable' }),
    ).rejects.toBeInstanceOf(NetworkError);
    expect(dead.offline).toBe(true);
    expect(dead.doc).toEqual(before);

    dead.retryConnection();
    expect(dead.offline).toBe(false);
  });

  it('takes all geometry from the service', async () => {
    const state = new EditorState(api);
    const { a } = await smallModel(state);

    state.manualMove(a, [500, 600]);
    expect(state.positionOf(a)).toEqual([500, 600]);

    const result = await state.autoLayout(true);
    const direct = await api.layout(state.modelId, true);
    expect(result).toEqual(direct);
    expect(state.overrides.size).toBe(0);
    for (const node of state.doc!.nodes) {
      expect(result.position_of[node.id]).toBeDefined();
    }
    for (const link of state.doc!.links) {
      expect(result.routes[link.id]).toBeDefined();
    }
  });

  it('writes a session log the metrics tooling can read back', async () => {
    const state = new EditorState(api);
    state.startPhase('creation');
    const { a, link } = await smallModel(state);
    await state.attachEvidence(link, { kind: 'experience', text: 'Felt rushed at the deadline', locator: null });
    state.endPhase('creation');

    state.startPhase('revision');
    await state.autoLayout(true);
    state.manualMove(a, [240, 120]);
    state.manualMove(a, [260, 180]);
    state.openEvidenceDrawer(link);
    state.endPhase('revision');

    state.startPhase('retrieval');
    await state.runSearch('rushed');
    state.endPhase('retrieval');

    const scratch = await mkdtemp(join(tmpdir(), 'dreams-log-'));
    try {
      const logPath = join(scratch, 'session-log.json');
      await writeFile(logPath, state.exportSessionLog(), 'utf8');
      const script = [
        'import json, sys',
        'from dreams.metrics import SessionLog',
        'log = SessionLog.from_dict(json.load(open(sys.argv[1])))',
        'counts = {}',
        'for action in log.actions:',
        '    counts[action.kind.value] = counts.get(action.kind.value, 0) + 1',
        'print(json.dumps(counts))',
      ].join('\n');
      const { stdout } = await execFileP('python3', ['-c', script, logPath]);
      const counts = JSON.parse(stdout) as Record<string, number>;
      expect(counts.add_node).toBe(2);
      expect(counts.add_link).toBe(1);
      expect(counts.attach_evidence).toBe(1);
      expect(counts.manual_move).toBe(2);
      expect(counts.auto_layout).toBe(1);
      expect(counts.search).toBe(1);
      expect(counts.open_evidence).toBe(1);
      expect(counts.phase_start).toBe(3);
      expect(counts.phase_end).toBe(3);
    } finally {
      await rm(scratch, { recursive: true, force: true });
    }
  });

  it('leaves a document that validates cleanly after an eventful session', async () => {
    const state = new EditorState(api);
    const { b, link } = await smallModel(state);
    await state.attachEvidence(link, { kind: 'reference', text: 'Capacity planning sheet', locator: null });
    const c = await state.addNode({ kind: 'assumption_node', label: 'Headcount stays flat' });
    await state.addLink(c, b, 'positive');
    await state.removeNode(c);
    await state.undo();
    await state.togglePolarity(link);
    await state.undo();
    await state.redo();

    const { stdout } = await execFileP('python3', [
      '-m', 'dreams.cli', 'validate',
      '--file', join(server.dataDir, `${state.modelId}.dreams.json`),
    ]);
    expect(stdout.trim()).toBe('ok');
  });
});
