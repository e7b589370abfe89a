/** three.js rendering of the SceneDoc: one mesh per node, door meshes are
 * clickable. Geometry sizes mirror the server's VRML exporter so both views
 * of the scene agree. */

import * as THREE from "three";
import type { CameraPose } from "./camera.js";
import type { SceneDoc, SceneNode, Vec3 } from "./types.js";

const COLORS: Record<string, number> = {
  floor_slab: 0x9aa0a6,
  shop_box: 0xc8b08c,
  door: 0x5b8dd9,
  sign: 0xefe3b0,
};

function boxSize(scene: SceneDoc, node: SceneNode): Vec3 {
  const layout = scene.layout;
  switch (node.kind) {
    case "floor_slab":
      return [layout.slots_per_floor * layout.shop_width_m, 0.2,
              layout.corridor_width_m + layout.shop_depth_m];
    case "shop_box":
      return [layout.shop_width_m, layout.floor_height_m, layout.shop_depth_m];
    case "door":
      return [1.0, 2.0, 0.1];
    case "sign":
      return [layout.shop_width_m * 0.6, 0.5, 0.1];
    default:
      return [0.2, 0.2, 0.2];
  }
}

export class MallRenderer {
  readonly scene3 = new THREE.Scene();
  readonly camera: THREE.PerspectiveCamera;
  private renderer: THREE.WebGLRenderer;
  private raycaster = new THREE.Raycaster();
  private doorMeshes: THREE.Mesh[] = [];

  constructor(
    readonly canvas: HTMLCanvasElement,
    readonly onDoorClick: (shopId: string) => void,
  ) {
    this.renderer = new THREE.WebGLRenderer({ canvas, antialias: true });
    this.camera = new THREE.PerspectiveCamera(65, 1, 0.1, 500);
    this.scene3.background = new THREE.Color(0x10131a);
    this.scene3.add(new THREE.AmbientLight(0xffffff, 0.7));
    const sun = new THREE.DirectionalLight(0xffffff, 1.2);
    sun.position.set(10, 30, -10);
    this.scene3.add(sun);
    canvas.addEventListener("click", (event) => this.pick(event));
  }

  build(doc: SceneDoc): void {
    for (const mesh of this.doorMeshes) mesh.removeFromParent();
    this.doorMeshes = [];
    for (const node of doc.nodes) {
      if (node.kind === "viewpoint") continue;
      const [sx, sy, sz] = boxSize(doc, node);
      const material = new THREE.MeshLambertMaterial({ color: COLORS[node.kind] ?? 0xffffff });
      const mesh = new THREE.Mesh(new THREE.BoxGeometry(sx, sy, sz), material);
      mesh.position.set(node.position[0], node.position[1], node.position[2]);
      mesh.rotation.y = node.yaw;
      mesh.userData.nodeId = node.id;
      if (node.shop_id) mesh.userData.shopId = node.shop_id;
      if (node.kind === "door") this.doorMeshes.push(mesh);
      this.scene3.add(mesh);
    }
  }

  applyPose(pose: CameraPose): void {
    const [x, y, z] = pose.position;
    this.camera.position.set(x, y, z);
    this.camera.lookAt(x + Math.cos(pose.yaw), y, z + Math.sin(pose.yaw));
  }

  resize(width: number, height: number): void {
    this.renderer.setSize(width, height, false);
    this.camera.aspect = width / height;
    this.camera.updateProjectionMatrix();
  }

  render(): void {
    this.renderer.render(this.scene3, this.camera);
  }

  private pick(event: MouseEvent): void {
    const rect = this.canvas.getBoundingClientRect();
    const ndc = new THREE.Vector2(
      ((event.clientX - rect.left) / rect.width) * 2 - 1,
      -((event.clientY - rect.top) / rect.height) * 2 + 1,
    );
    this.raycaster.setFromCamera(ndc, this.camera);
    const hits = this.raycaster.intersectObjects(this.doorMeshes, false);
    const hit = hits[0];
    if (hit) this.onDoorClick(hit.object.userData.shopId as string);
  }
}
