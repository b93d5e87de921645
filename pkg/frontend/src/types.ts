export type CandidateStatus =
  | "sampled"
  | "refined"
  | "accepted"
  | "rejected"
  | "template";

export interface CandidateScores {
  penetrationVolumeCm3: number;
  contactVertexCount: number;
  [key: string]: number;
}

export interface CandidateCard {
  id: string;
  scores: CandidateScores;
  status: CandidateStatus;
}

export interface MeshPayload {
  id: string;
  handObj: string;
  objectObj: string;
  /** indices of hand vertices lying inside the object mesh */
  objectInsideMask: number[];
}

export interface ParsedMesh {
  /** flat xyz triples */
  vertices: Float32Array;
  /** flat vertex-index triples */
  faces: Uint32Array;
}

export type MutableStatus = "accepted" | "rejected" | "template";
