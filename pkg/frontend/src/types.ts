export interface SpaceSampleInfo {
  r: number[];
  name: string;
}

export interface SpaceDescription {
  samples: SpaceSampleInfo[];
  simplices: number[][];
  modes: string[];
  frames: number;
  kind: string;
}

export interface FrameInfo {
  url: string;
  weights: number[];
  labels: string[];
  simplex: number;
  mode: string;
}
