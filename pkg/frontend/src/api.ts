// Thin fetch client for the dreams service. Every mutation carries the
// revision the caller saw as If-Match and returns the server's canonical
// document, which the caller must adopt wholesale.

import type {
  DocumentJson,
  ErrorJson,
  EvidenceKind,
  LayoutJson,
  ModelKind,
  ModelRowJson,
  NodeKind,
  Polarity,
  SearchResultJson,
} from './types.js';

export class ApiError extends Error {
  readonly status: number;
  readonly code: string;
  readonly detail: string;
  readonly offendingId: string | null;

  constructor(body: ErrorJson) {
    super(`${body.code}: ${body.detail}`);
    this.name = 'ApiError';
    this.status = body.status;
    this.code = body.code;
    this.detail = body.detail;
    this.offendingId = body.offending_id;
  }

  get staleRevision(): boolean {
    return this.code === 'stale_revision';
  }
}

export class NetworkError extends Error {
  constructor(cause: unknown) {
    super('service unreachable');
    this.name = 'NetworkError';
    this.cause = cause;
  }
}

export interface SearchFilters {
  kind?: NodeKind;
  polarity?: Polarity;
  evidence?: EvidenceKind;
  limit?: number;
}

interface RequestOptions {
  revision?: number;
  body?: unknown;
}

export class ApiClient {
  constructor(
    readonly baseUrl: string,
    private readonly fetchImpl: typeof fetch = (input, init) => globalThis.fetch(input, init),
  ) {}

  private async request<T>(method: string, path: string, options: RequestOptions = {}): Promise<T> {
    const headers: Record<string, string> = {};
    if (options.body !== undefined) {
      headers['Content-Type'] = 'application/json';
    }
    if (options.revision !== undefined) {
      headers['If-Match'] = String(options.revision);
    }
    let response: Response;
    try {
      response = await this.fetchImpl(this.baseUrl + path, {
        method,
        headers,
        body: options.body !== undefined ? JSON.stringify(options.body) : undefined,
      });
    } catch (cause) {
      throw new NetworkError(cause);
    }
    if (response.status === 204) {
      return undefined as T;
    }
    if (!response.ok) {
      throw new ApiError((await response.json()) as ErrorJson);
    }
    return (await response.json()) as T;
  }

  listModels(): Promise<{ models: ModelRowJson[] }> {
    return this.request('GET', '/models');
  }

  createModel(kind: ModelKind, title: string): Promise<DocumentJson> {
    return this.request('POST', '/models', { body: { kind, title } });
  }

  getModel(modelId: string): Promise<DocumentJson> {
    return this.request('GET', `/models/${modelId}`);
  }

  deleteModel(modelId: string, revision: number): Promise<void> {
    return this.request('DELETE', `/models/${modelId}`, { revision });
  }

  addNode(
    modelId: string,
    revision: number,
    fields: { kind: NodeKind; label: string; notes?: string | null; tags?: string[] },
  ): Promise<DocumentJson> {
    return this.request('POST', `/models/${modelId}/nodes`, { revision, body: fields });
  }

  patchNode(
    modelId: string,
    revision: number,
    nodeId: string,
    fields: { kind?: NodeKind; label?: string; notes?: string | null; tags?: string[] },
  ): Promise<DocumentJson> {
    return this.request('PATCH', `/models/${modelId}/nodes/${nodeId}`, { revision, body: fields });
  }

  deleteNode(modelId: string, revision: number, nodeId: string): Promise<DocumentJson> {
    return this.request('DELETE', `/models/${modelId}/nodes/${nodeId}`, { revision });
  }

  addLink(
    modelId: string,
    revision: number,
    fields: { source: string; target: string; polarity: Polarity; notes?: string | null },
  ): Promise<DocumentJson> {
    return this.request('POST', `/models/${modelId}/links`, { revision, body: fields });
  }

  patchLink(
    modelId: string,
    revision: number,
    linkId: string,
    fields: { polarity?: Polarity; notes?: string | null },
  ): Promise<DocumentJson> {
    return this.request('PATCH', `/models/${modelId}/links/${linkId}`, { revision, body: fields });
  }

  deleteLink(modelId: string, revision: number, linkId: string): Promise<DocumentJson> {
    return this.request('DELETE', `/models/${modelId}/links/${linkId}`, { revision });
  }

  attachEvidence(
    modelId: string,
    revision: number,
    linkId: string,
    fields: { kind: EvidenceKind; text: string; locator?: string | null },
  ): Promise<DocumentJson> {
    return this.request('POST', `/models/${modelId}/links/${linkId}/evidence`, {
      revision,
      body: fields,
    });
  }

  detachEvidence(
    modelId: string,
    revision: number,
    linkId: string,
    evidenceId: string,
  ): Promise<DocumentJson> {
    return this.request('DELETE', `/models/${modelId}/links/${linkId}/evidence/${evidenceId}`, {
      revision,
    });
  }

  layout(modelId: string, incremental = true): Promise<LayoutJson> {
    return this.request('GET', `/models/${modelId}/layout?incremental=${incremental}`);
  }

  search(modelId: string, q: string, filters: SearchFilters = {}): Promise<SearchResultJson> {
    const params = new URLSearchParams({ q });
    if (filters.kind) params.set('kind', filters.kind);
    if (filters.polarity) params.set('polarity', filters.polarity);
    if (filters.evidence) params.set('evidence', filters.evidence);
    if (filters.limit !== undefined) params.set('limit', String(filters.limit));
    return this.request('GET', `/models/${modelId}/search?${params.toString()}`);
  }

  stats(modelId: string): Promise<Record<string, unknown>> {
    return this.request('GET', `/models/${modelId}/stats`);
  }
}
