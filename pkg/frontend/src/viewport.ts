/**
 * 3D viewport: renders protocol scenes, nothing else.
 *
 * Solids and ghosts arrive as indexed triangle meshes with per-face
 * leaf ids; this class expands them to flat-shaded geometry and tints
 * faces from the active HighlightState (green = selected subtree,
 * pink = impacted nodes, via the id-prefix test in decorations.ts).
 * Ghost operands render semi-transparent green/pink at alpha 0.35.
 * Picking solids is the server's job (the UI only supplies rays);
 * the local raycaster is used for gizmo handles alone.
 */

import * as THREE from "three";
import { OrbitControls } from "three/examples/jsm/controls/OrbitControls.js";
import { classifyLeaf } from "./decorations";
import type { HighlightState, Scene, ScenePart } from "./protocol";
import type { HandleAxis, PointerRay } from "./gizmo";

const BASE_COLOR = new THREE.Color(0x9aa3ad);
const TARGET_COLOR = new THREE.Color(0x3fae6a);
const IMPACTED_COLOR = new THREE.Color(0xe07a9e);
const GHOST_ALPHA = 0.35;

interface SolidRecord {
  mesh: THREE.Mesh;
  faceSource: string[];
  colors: THREE.BufferAttribute;
}

export class Viewport {
  readonly camera: THREE.PerspectiveCamera;
  readonly renderer: THREE.WebGLRenderer;
  readonly controls: OrbitControls;

  private readonly scene3 = new THREE.Scene();
  private readonly solidGroup = new THREE.Group();
  private readonly ghostGroup = new THREE.Group();
  private gizmoGroup: THREE.Object3D | null = null;
  private readonly solids: SolidRecord[] = [];
  private readonly raycaster = new THREE.Raycaster();
  private highlight: HighlightState | null = null;
  private fitted = false;

  constructor(private readonly container: HTMLElement) {
    this.renderer = new THREE.WebGLRenderer({ antialias: true });
    this.renderer.setPixelRatio(window.devicePixelRatio);
    container.appendChild(this.renderer.domElement);

    this.camera = new THREE.PerspectiveCamera(50, 1, 0.1, 5000);
    this.camera.position.set(60, -80, 55);
    this.camera.up.set(0, 0, 1); // CAD convention: z is up
    this.controls = new OrbitControls(this.camera, this.renderer.domElement);
    this.controls.enableDamping = true;

    this.scene3.background = new THREE.Color(0x1c1f24);
    const hemi = new THREE.HemisphereLight(0xffffff, 0x30343c, 1.0);
    const key = new THREE.DirectionalLight(0xffffff, 1.4);
    key.position.set(80, -60, 120);
    const fill = new THREE.DirectionalLight(0xffffff, 0.5);
    fill.position.set(-60, 70, -40);
    this.scene3.add(hemi, key, fill);

    const grid = new THREE.GridHelper(200, 20, 0x3a4048, 0x2a2f36);
    grid.rotation.x = Math.PI / 2; // into the xy plane
    this.scene3.add(grid);
    this.scene3.add(new THREE.AxesHelper(12));
    this.scene3.add(this.solidGroup, this.ghostGroup);

    new ResizeObserver(() => this.resize()).observe(container);
    this.resize();
    this.renderer.setAnimationLoop(() => {
      this.controls.update();
      this.renderer.render(this.scene3, this.camera);
    });
  }

  private resize(): void {
    const w = this.container.clientWidth || 1;
    const h = this.container.clientHeight || 1;
    this.renderer.setSize(w, h);
    this.camera.aspect = w / h;
    this.camera.updateProjectionMatrix();
  }

  // -- scene content ---------------------------------------------------------

  setScene(scene: Scene | null): void {
    disposeChildren(this.solidGroup);
    disposeChildren(this.ghostGroup);
    this.solids.length = 0;
    if (scene === null) return;

    for (const part of scene.parts) {
      const { geometry, faceSource, colors } = buildGeometry(part);
      const material = new THREE.MeshLambertMaterial({ vertexColors: true });
      const mesh = new THREE.Mesh(geometry, material);
      mesh.userData.nodeId = part.node_id;
      this.solidGroup.add(mesh);
      this.solids.push({ mesh, faceSource, colors });
    }
    for (const ghost of scene.ghosts) {
      const { geometry } = buildGeometry(ghost);
      const color = ghost.classification === "target" ? TARGET_COLOR : IMPACTED_COLOR;
      const material = new THREE.MeshLambertMaterial({
        color,
        transparent: true,
        opacity: GHOST_ALPHA,
        depthWrite: false,
      });
      const mesh = new THREE.Mesh(geometry, material);
      mesh.renderOrder = 1;
      mesh.userData.nodeId = ghost.node_id;
      this.ghostGroup.add(mesh);
    }
    this.applyHighlightColors();
    if (!this.fitted && scene.parts.length > 0) {
      this.fitToContent();
      this.fitted = true;
    }
  }

  setHighlight(state: HighlightState | null): void {
    this.highlight = state;
    this.applyHighlightColors();
  }

  private applyHighlightColors(): void {
    for (const { faceSource, colors } of this.solids) {
      const array = colors.array as Float32Array;
      for (let face = 0; face < faceSource.length; face++) {
        const cls = classifyLeaf(faceSource[face] as string, this.highlight);
        const c = cls === "target" ? TARGET_COLOR
          : cls === "impacted" ? IMPACTED_COLOR
          : BASE_COLOR;
        for (let v = 0; v < 3; v++) {
          const at = (face * 3 + v) * 3;
          array[at] = c.r;
          array[at + 1] = c.g;
          array[at + 2] = c.b;
        }
      }
      colors.needsUpdate = true;
    }
  }

  fitToContent(): void {
    const box = new THREE.Box3().setFromObject(this.solidGroup);
    if (box.isEmpty()) return;
    const center = box.getCenter(new THREE.Vector3());
    const size = box.getSize(new THREE.Vector3()).length() || 10;
    const dir = new THREE.Vector3(1.0, -1.2, 0.9).normalize();
    this.camera.position.copy(center.clone().addScaledVector(dir, size * 1.4));
    this.controls.target.copy(center);
    this.controls.update();
  }

  // -- pointer helpers -------------------------------------------------------

  /** World-space ray through a pointer event, for server-side picking. */
  rayFromPointer(event: { clientX: number; clientY: number }): PointerRay {
    const rect = this.renderer.domElement.getBoundingClientRect();
    const ndc = new THREE.Vector2(
      ((event.clientX - rect.left) / rect.width) * 2 - 1,
      -((event.clientY - rect.top) / rect.height) * 2 + 1,
    );
    this.raycaster.setFromCamera(ndc, this.camera);
    const { origin, direction } = this.raycaster.ray;
    return {
      origin: [origin.x, origin.y, origin.z],
      dir: [direction.x, direction.y, direction.z],
    };
  }

  viewDirection(): [number, number, number] {
    const v = new THREE.Vector3();
    this.camera.getWorldDirection(v);
    return [v.x, v.y, v.z];
  }

  // -- gizmo -----------------------------------------------------------------

  attachGizmo(group: THREE.Object3D): void {
    this.detachGizmo();
    this.gizmoGroup = group;
    this.scene3.add(group);
    this.scaleGizmoToView();
  }

  detachGizmo(): void {
    if (this.gizmoGroup) {
      this.scene3.remove(this.gizmoGroup);
      disposeObject(this.gizmoGroup);
      this.gizmoGroup = null;
    }
  }

  /** Keep the gizmo a constant apparent size as the camera moves. */
  scaleGizmoToView(): void {
    if (!this.gizmoGroup) return;
    const distance = this.camera.position.distanceTo(this.gizmoGroup.position);
    const s = Math.max(0.001, distance / 7);
    this.gizmoGroup.scale.setScalar(s);
  }

  /** Which gizmo handle a pointer event touches, if any. */
  pickGizmoHandle(event: { clientX: number; clientY: number }): HandleAxis | null {
    if (!this.gizmoGroup) return null;
    this.rayFromPointer(event); // leaves this.raycaster configured
    const hits = this.raycaster.intersectObject(this.gizmoGroup, true);
    for (const hit of hits) {
      const axis = hit.object.userData.axis as HandleAxis | undefined;
      if (axis) return axis;
    }
    return null;
  }
}

// ---------------------------------------------------------------------------
// geometry construction
// ---------------------------------------------------------------------------

function buildGeometry(part: ScenePart): {
  geometry: THREE.BufferGeometry;
  faceSource: string[];
  colors: THREE.BufferAttribute;
} {
  const triCount = part.triangles.length;
  const positions = new Float32Array(triCount * 9);
  const colorArray = new Float32Array(triCount * 9);
  for (let face = 0; face < triCount; face++) {
    const tri = part.triangles[face] as number[];
    for (let v = 0; v < 3; v++) {
      const vertex = part.vertices[tri[v] as number] as number[];
      const at = (face * 3 + v) * 3;
      positions[at] = vertex[0] as number;
      positions[at + 1] = vertex[1] as number;
      positions[at + 2] = vertex[2] as number;
      colorArray[at] = BASE_COLOR.r;
      colorArray[at + 1] = BASE_COLOR.g;
      colorArray[at + 2] = BASE_COLOR.b;
    }
  }
  const geometry = new THREE.BufferGeometry();
  geometry.setAttribute("position", new THREE.BufferAttribute(positions, 3));
  const colors = new THREE.BufferAttribute(colorArray, 3);
  geometry.setAttribute("color", colors);
  geometry.computeVertexNormals(); // unshared vertices give flat facets
  return { geometry, faceSource: part.face_source, colors };
}

function disposeObject(root: THREE.Object3D): void {
  root.traverse((obj) => {
    const mesh = obj as THREE.Mesh;
    if (mesh.geometry) mesh.geometry.dispose();
    const material = mesh.material as THREE.Material | THREE.Material[] | undefined;
    if (Array.isArray(material)) material.forEach((m) => m.dispose());
    else if (material) material.dispose();
  });
}

function disposeChildren(group: THREE.Group): void {
  for (const child of [...group.children]) {
    group.remove(child);
    disposeObject(child);
  }
}
