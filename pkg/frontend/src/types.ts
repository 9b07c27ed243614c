// Wire types for the dreams HTTP service. Field names mirror the JSON
// bodies exactly; the client never invents fields of its own.

export type ModelKind = 'reference_model' | 'impact_model';

export type NodeKind =
  | 'influencing_factor'
  | 'success_factor'
  | 'key_factor'
  | 'assumption_node';

export type Polarity = 'positive' | 'negative';

export type EvidenceKind = 'assumption' | 'reference' | 'experience';

export interface EvidenceJson {
  id: string;
  kind: EvidenceKind;
  text: string;
  locator: string | null;
  created_at: string;
}

export interface NodeJson {
  id: string;
  kind: NodeKind;
  label: string;
  notes: string | null;
  tags: string[];
}

export interface LinkJson {
  id: string;
  source: string;
  target: string;
  polarity: Polarity;
  notes: string | null;
  evidence: EvidenceJson[];
}

export interface DocumentJson {
  schema_version: string;
  model: { id: string; kind: ModelKind; title: string; revision: number };
  nodes: NodeJson[];
  links: LinkJson[];
}

export interface ModelRowJson {
  id: string;
  kind: ModelKind;
  title: string;
  revision: number;
}

export interface LayoutJson {
  layer_of: Record<string, number>;
  order_of: Record<string, number>;
  position_of: Record<string, [number, number]>;
  routes: Record<string, [number, number][]>;
  reversed_links: string[];
  crossing_count: number;
  revision: number;
}

export interface SnippetJson {
  text: string;
  spans: [number, number][];
}

export interface SearchHitJson {
  target: string;
  target_type: 'node' | 'link' | 'evidence';
  owner_path: string[];
  matched_field: string;
  score: number;
  snippet: SnippetJson;
}

export interface SearchResultJson {
  revision: number;
  hits: SearchHitJson[];
}

export interface ErrorJson {
  status: number;
  code: string;
  detail: string;
  offending_id: string | null;
}
