// Wire shapes of the labeling service API.

export type QuestionKind = 'genus' | 'differentia' | 'new_category';

export interface QuestionWire {
  kind: QuestionKind;
  object_id: string;
  seq: number;
  category_id: number;
  prompt: string;
  category_path: string;
  category_name: string | null;
  genus: string;
  differentia: string;
}

export interface CropWire {
  x: number;
  y: number;
  side: number;
}

export interface ObjectViewWire {
  object_id: string;
  uri: string | null;
  crop?: CropWire;
}

export interface CandidateWire {
  category_id: number;
  name: string | null;
  path: string;
  genus: string;
  differentia: string;
  has_children: boolean;
  is_root: boolean;
  exemplars: ObjectViewWire[];
}

export interface NextWire {
  done: boolean;
  question: QuestionWire | null;
  object?: ObjectViewWire;
  candidate?: CandidateWire;
}

export interface HierarchyNodeWire {
  id: number;
  parent: number | null;
  name: string | null;
  genus: string;
  differentia: string;
  children: number[];
  members: string[];
}

export interface HierarchyWire {
  root: number;
  nodes: HierarchyNodeWire[];
}

export interface StatsWire {
  objects: { total: number; assigned: number; aborted: number; pending: number };
  questions: { genus: number; differentia: number; new_category: number; total: number };
  categories: { count: number; created: number };
  done: boolean;
}

export interface StateWire {
  session_id: string;
  hierarchy: HierarchyWire;
  stats: StatsWire;
}

export interface NewCategoryBody {
  name: string | null;
  genus: string;
  differentia: string;
}

export interface AnswerBody {
  object_id: string;
  seq: number;
  verdict?: boolean;
  new_category?: NewCategoryBody | null;
}

export interface AnswerAck {
  ack: { object_id: string; seq: number; accepted: boolean; done: boolean };
  next: NextWire;
}

export interface ExportWire {
  session_id: string;
  dataset_jsonl: string;
  hierarchy_json: string;
  transcripts_jsonl: string;
}
