/**
 * Transform gizmos: the drag math and the handle meshes.
 *
 * The math half is pure and works on plain vectors so it can be tested
 * without a renderer: a DragSession turns pointer rays into the TOTAL
 * accumulated transform parameters since the drag began, which is
 * exactly what updateDrag wants (ticks replace each other server-side).
 * The mouse wheel nudges the active component by 0.1 per tick for fine
 * control. The mesh half builds three.js handle groups, one child per
 * axis, tagged with userData.axis for picking.
 */

import * as THREE from "three";
import type { Axis, Frame, TransformKind, TransformParams } from "./protocol";

export type Vec3 = [number, number, number];
export type HandleAxis = Axis | "uniform";

export const WHEEL_STEP = 0.1;

// ---------------------------------------------------------------------------
// small vector helpers (plain tuples keep the math trivially testable)
// ---------------------------------------------------------------------------

const sub = (a: Vec3, b: Vec3): Vec3 => [a[0] - b[0], a[1] - b[1], a[2] - b[2]];
const dot = (a: Vec3, b: Vec3): number => a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
const cross = (a: Vec3, b: Vec3): Vec3 => [
  a[1] * b[2] - a[2] * b[1],
  a[2] * b[0] - a[0] * b[2],
  a[0] * b[1] - a[1] * b[0],
];
const norm = (a: Vec3): number => Math.sqrt(dot(a, a));

function normalize(a: Vec3): Vec3 {
  const n = norm(a);
  if (n === 0) return [0, 0, 0];
  return [a[0] / n, a[1] / n, a[2] / n];
}

/** Column `axis` of a row-major 3x3 rotation: the world direction of a gizmo axis. */
export function frameAxis(frame: Frame, axis: Axis): Vec3 {
  const k = axis === "x" ? 0 : axis === "y" ? 1 : 2;
  const r = frame.rotation;
  return [r[0]![k]!, r[1]![k]!, r[2]![k]!];
}

/**
 * Parameter t of the point on the line `origin + t * dir` closest to
 * the given ray; null when the two are near parallel and the contact
 * point is unstable.
 */
export function axisParameter(
  origin: Vec3, dir: Vec3, rayOrigin: Vec3, rayDir: Vec3,
): number | null {
  const a = normalize(dir);
  const d = normalize(rayDir);
  const w = sub(origin, rayOrigin);
  const b = dot(a, d);
  const denom = 1 - b * b;
  if (Math.abs(denom) < 1e-9) return null;
  const s = (dot(d, w) - dot(a, w) * b) / denom;
  return -dot(a, w) + s * b;
}

/** Ray/plane intersection point; null when the ray runs along the plane. */
export function planeHit(
  planeOrigin: Vec3, planeNormal: Vec3, rayOrigin: Vec3, rayDir: Vec3,
): Vec3 | null {
  const n = normalize(planeNormal);
  const d = normalize(rayDir);
  const denom = dot(n, d);
  if (Math.abs(denom) < 1e-9) return null;
  const t = dot(n, sub(planeOrigin, rayOrigin)) / denom;
  return [
    rayOrigin[0] + t * d[0],
    rayOrigin[1] + t * d[1],
    rayOrigin[2] + t * d[2],
  ];
}

/** Signed angle in degrees from va to vb about the axis n (right-handed). */
export function signedAngleDeg(va: Vec3, vb: Vec3, n: Vec3): number {
  const axis = normalize(n);
  const s = dot(axis, cross(va, vb));
  const c = dot(va, vb);
  return (Math.atan2(s, c) * 180) / Math.PI;
}

// ---------------------------------------------------------------------------
// drag session
// ---------------------------------------------------------------------------

export interface PointerRay {
  origin: Vec3;
  dir: Vec3;
}

/**
 * One press-to-release manipulation. Construct at pointer-down with
 * the ray through the press point; feed subsequent rays to `update`
 * and wheel events to `wheel`; read `params()` for the accumulated
 * protocol parameters.
 */
export class DragSession {
  /** accumulated scalar: axis distance, degrees, or (factor - 1) */
  private value = 0;
  private readonly startParam: number | null = null;
  private readonly startHit: Vec3 | null = null;
  private readonly axisWorld: Vec3;
  private readonly viewNormal: Vec3;

  constructor(
    readonly kind: TransformKind,
    readonly axis: HandleAxis,
    readonly frame: Frame,
    startRay: PointerRay,
    viewDir: Vec3,
  ) {
    this.axisWorld = axis === "uniform"
      ? [0, 0, 0]
      : frameAxis(frame, axis);
    this.viewNormal = normalize(viewDir);
    const o = frame.origin as Vec3;
    if (kind === "rotate" && axis !== "uniform") {
      this.startHit = planeHit(o, this.axisWorld, startRay.origin, startRay.dir);
    } else if (axis === "uniform") {
      this.startHit = planeHit(o, this.viewNormal, startRay.origin, startRay.dir);
    } else {
      this.startParam = axisParameter(o, this.axisWorld, startRay.origin, startRay.dir);
    }
    if (kind === "scale") this.value = 0; // stored as factor - 1
  }

  /** Update from the current pointer ray; returns false on a degenerate ray. */
  update(ray: PointerRay): boolean {
    const o = this.frame.origin as Vec3;
    if (this.kind === "rotate" && this.axis !== "uniform") {
      if (this.startHit === null) return false;
      const hit = planeHit(o, this.axisWorld, ray.origin, ray.dir);
      if (hit === null) return false;
      this.value = signedAngleDeg(sub(this.startHit, o), sub(hit, o), this.axisWorld);
      return true;
    }
    if (this.axis === "uniform") {
      if (this.startHit === null) return false;
      const hit = planeHit(o, this.viewNormal, ray.origin, ray.dir);
      if (hit === null) return false;
      const r0 = norm(sub(this.startHit, o));
      const r1 = norm(sub(hit, o));
      if (r0 < 1e-9) return false;
      this.value = r1 / r0 - 1;
      return true;
    }
    if (this.startParam === null) return false;
    const t = axisParameter(o, this.axisWorld, ray.origin, ray.dir);
    if (t === null) return false;
    const moved = t - this.startParam;
    this.value = this.kind === "scale" ? moved / this.scaleReference() : moved;
    return true;
  }

  /** One wheel tick: 0.1 units / degrees / factor per notch. */
  wheel(direction: 1 | -1): void {
    this.value += WHEEL_STEP * direction;
  }

  private scaleReference(): number {
    // one gizmo-handle length of pointer travel doubles the size
    return 1;
  }

  params(): TransformParams {
    if (this.kind === "translate") {
      const delta: Vec3 = [0, 0, 0];
      delta[this.axis === "x" ? 0 : this.axis === "y" ? 1 : 2] = this.value;
      return { delta };
    }
    if (this.kind === "rotate") {
      return { axis: this.axis as Axis, angle: this.value };
    }
    const f = Math.max(0.05, 1 + this.value);
    const factors: Vec3 = this.axis === "uniform"
      ? [f, f, f]
      : [
          this.axis === "x" ? f : 1,
          this.axis === "y" ? f : 1,
          this.axis === "z" ? f : 1,
        ];
    return { factors };
  }

  /** True when the accumulated value is still exactly zero. */
  isNoop(): boolean {
    return this.value === 0;
  }
}

// ---------------------------------------------------------------------------
// handle meshes
// ---------------------------------------------------------------------------

const AXIS_COLORS: Record<HandleAxis, number> = {
  x: 0xd04a4a,
  y: 0x4ab04a,
  z: 0x4a6ad0,
  uniform: 0xc9b038,
};

function handleMaterial(axis: HandleAxis): THREE.MeshBasicMaterial {
  return new THREE.MeshBasicMaterial({
    color: AXIS_COLORS[axis],
    depthTest: false,
    transparent: true,
    opacity: 0.95,
  });
}

function axisQuaternion(axis: Axis): THREE.Quaternion {
  // geometries are authored along +Y; rotate them onto the target axis
  const q = new THREE.Quaternion();
  if (axis === "x") q.setFromAxisAngle(new THREE.Vector3(0, 0, 1), -Math.PI / 2);
  if (axis === "z") q.setFromAxisAngle(new THREE.Vector3(1, 0, 0), Math.PI / 2);
  return q;
}

function tagged(mesh: THREE.Object3D, axis: HandleAxis): THREE.Object3D {
  mesh.userData.axis = axis;
  mesh.traverse((child) => { child.userData.axis = axis; });
  return mesh;
}

function arrowHandle(axis: Axis): THREE.Object3D {
  const material = handleMaterial(axis);
  const group = new THREE.Group();
  const shaft = new THREE.Mesh(new THREE.CylinderGeometry(0.02, 0.02, 0.8), material);
  shaft.position.y = 0.4;
  const head = new THREE.Mesh(new THREE.ConeGeometry(0.07, 0.2), material);
  head.position.y = 0.9;
  group.add(shaft, head);
  group.quaternion.copy(axisQuaternion(axis));
  return tagged(group, axis);
}

function ringHandle(axis: Axis): THREE.Object3D {
  const ring = new THREE.Mesh(
    new THREE.TorusGeometry(0.85, 0.025, 8, 48),
    handleMaterial(axis),
  );
  // torus lies in the xy plane (normal +z); move its normal onto the axis
  if (axis === "x") ring.rotateY(Math.PI / 2);
  if (axis === "y") ring.rotateX(Math.PI / 2);
  return tagged(ring, axis);
}

function scaleHandle(axis: Axis): THREE.Object3D {
  const material = handleMaterial(axis);
  const group = new THREE.Group();
  const shaft = new THREE.Mesh(new THREE.CylinderGeometry(0.02, 0.02, 0.75), material);
  shaft.position.y = 0.375;
  const tip = new THREE.Mesh(new THREE.BoxGeometry(0.12, 0.12, 0.12), material);
  tip.position.y = 0.8;
  group.add(shaft, tip);
  group.quaternion.copy(axisQuaternion(axis));
  return tagged(group, axis);
}

/** Handle group for one mode; children carry userData.axis. */
export function buildGizmo(kind: TransformKind): THREE.Group {
  const group = new THREE.Group();
  group.renderOrder = 10;
  const axes: Axis[] = ["x", "y", "z"];
  if (kind === "translate") {
    for (const axis of axes) group.add(arrowHandle(axis));
  } else if (kind === "rotate") {
    for (const axis of axes) group.add(ringHandle(axis));
  } else {
    for (const axis of axes) group.add(scaleHandle(axis));
    const center = new THREE.Mesh(
      new THREE.BoxGeometry(0.14, 0.14, 0.14),
      handleMaterial("uniform"),
    );
    group.add(tagged(center, "uniform"));
  }
  group.name = `gizmo-${kind}`;
  return group;
}

/** Place a gizmo group at a protocol frame. */
export function applyFrame(group: THREE.Object3D, frame: Frame): void {
  const [x, y, z] = frame.origin as Vec3;
  group.position.set(x, y, z);
  const r = frame.rotation;
  const m = new THREE.Matrix4().set(
    r[0]![0]!, r[0]![1]!, r[0]![2]!, 0,
    r[1]![0]!, r[1]![1]!, r[1]![2]!, 0,
    r[2]![0]!, r[2]![1]!, r[2]![2]!, 0,
    0, 0, 0, 1,
  );
  group.quaternion.setFromRotationMatrix(m);
}
