/** Document types mirroring the scene service's JSON schemas (docs/formats.md). */

export interface PoseDoc {
  rotation: number[][]; // 3x3 world-from-camera, orthonormal det +1
  translation: number[]; // camera center, meters
}

export interface CameraDoc {
  fx: number;
  fy: number;
  cx: number;
  cy: number;
  width: number;
  height: number;
  pose: PoseDoc;
}

export interface HalfspaceDoc {
  normal: number[]; // unit 3-vector; inside iff dot(normal, x) - offset <= 0
  offset: number;
}

export interface PrimitiveDoc {
  id: string;
  halfspaces: HalfspaceDoc[];
  label?: string;
}

export interface SceneDoc {
  version: string; // "b2w/1"
  camera: CameraDoc;
  primitives: PrimitiveDoc[];
  prompt: string;
  seed: number;
}

export type EditOpDoc =
  | { op: "translate"; id: string; delta: number[] }
  | { op: "add"; primitive: PrimitiveDoc }
  | { op: "delete"; id: string }
  | { op: "set_camera_pose"; rotation: number[][]; translation: number[] }
  | { op: "set_prompt"; prompt: string }
  | { op: "set_seed"; seed: number };

export interface EditAck {
  revision: number;
  scene: SceneDoc;
  preview_png_b64: string;
}

export interface RenderAck {
  image_png_b64: string;
  renderer: string;
  elapsed_ms: number;
}
