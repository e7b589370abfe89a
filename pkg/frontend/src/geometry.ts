/** Corridor containment check mirroring the server's layout convention;
 * used to assert the camera never leaves the corridor volume. */

import type { Layout, Vec3 } from "./types.js";

export function corridorContains(layout: Layout, point: Vec3, eps = 1e-9): boolean {
  const [x, y, z] = point;
  const length = layout.slots_per_floor * layout.shop_width_m;
  const halfW = layout.corridor_width_m / 2;
  return (
    x >= -eps && x <= length + eps &&
    y >= -eps && y <= layout.floors * layout.floor_height_m + eps &&
    z >= -halfW - eps && z <= halfW + eps
  );
}
