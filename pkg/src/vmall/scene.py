"""3D mall scene compiler, camera walkthrough, and exporters.

Geometry convention: x runs along the corridor, y is up, z crosses the
corridor. Shops line one side of the corridor (positive z); the corridor
centerline is z = 0. Yaw is radians about the vertical axis with 0 facing +x
and pi/2 facing +z, i.e. the view direction is (cos yaw, 0, sin yaw).

Everything here is a pure function of its inputs, so identical scenes export
byte-identical documents.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

from . import errors
from .domain import Shop

EYE_HEIGHT_M = 1.6
DOOR_DWELL_S = 2.0
DOOR_APPROACH_M = 1.5

FLOOR_SLAB = "floor_slab"
SHOP_BOX = "shop_box"
DOOR = "door"
SIGN = "sign"
VIEWPOINT = "viewpoint"

VRML_HEADER = "#VRML V2.0 utf8"


@dataclass(frozen=True)
class MallLayout:
    floors: int = 2
    slots_per_floor: int = 3
    corridor_width_m: float = 3.0
    shop_width_m: float = 6.0
    shop_depth_m: float = 5.0
    floor_height_m: float = 3.0

    def __post_init__(self):
        if self.floors < 1 or self.slots_per_floor < 1:
            raise errors.BadConfig("layout needs at least one floor and one slot")
        for name in ("corridor_width_m", "shop_width_m", "shop_depth_m", "floor_height_m"):
            if getattr(self, name) <= 0:
                raise errors.BadConfig(f"layout dimension {name} must be positive")

    @property
    def corridor_length_m(self) -> float:
        return self.slots_per_floor * self.shop_width_m

    def to_dict(self) -> dict:
        return {
            "floors": self.floors,
            "slots_per_floor": self.slots_per_floor,
            "corridor_width_m": self.corridor_width_m,
            "shop_width_m": self.shop_width_m,
            "shop_depth_m": self.shop_depth_m,
            "floor_height_m": self.floor_height_m,
        }

    @staticmethod
    def from_dict(data: dict) -> "MallLayout":
        return MallLayout(
            floors=data["floors"], slots_per_floor=data["slots_per_floor"],
            corridor_width_m=data["corridor_width_m"], shop_width_m=data["shop_width_m"],
            shop_depth_m=data["shop_depth_m"], floor_height_m=data["floor_height_m"],
        )


@dataclass(frozen=True)
class SceneNode:
    node_id: str
    kind: str
    position: tuple[float, float, float]
    yaw: float
    shop_id: str | None = None
    label: str | None = None


@dataclass(frozen=True)
class SceneGraph:
    layout: MallLayout
    nodes: tuple[SceneNode, ...]
    entrance_id: str

    def doors(self) -> list[SceneNode]:
        return [n for n in self.nodes if n.kind == DOOR]

    def node(self, node_id: str) -> SceneNode:
        for n in self.nodes:
            if n.node_id == node_id:
                return n
        raise KeyError(node_id)


@dataclass(frozen=True)
class Keyframe:
    position: tuple[float, float, float]
    yaw: float
    dwell_s: float = 0.0


@dataclass(frozen=True)
class CameraPath:
    keyframes: tuple[Keyframe, ...]


def _eye(layout: MallLayout, floor: int) -> float:
    return floor * layout.floor_height_m + EYE_HEIGHT_M


def _door_front_z(layout: MallLayout) -> float:
    # 1.5 m in front of the door, clamped so narrow corridors stay contained.
    return layout.corridor_width_m / 2 - min(DOOR_APPROACH_M, layout.corridor_width_m)


def build_mall_scene(layout: MallLayout, shops: list[Shop]) -> SceneGraph:
    """Compile registered shops into a scene graph.

    Deterministic placement: a shop occupies slot * shop_width along its
    floor's corridor; its door and sign sit centered on the corridor-facing
    face. Exactly one entrance viewpoint at the corridor start of floor 0.
    """
    for shop in shops:
        if shop.floor >= layout.floors or shop.slot >= layout.slots_per_floor:
            raise errors.ShopOutOfBounds(shop.id)
    half_w = layout.corridor_width_m / 2
    nodes: list[SceneNode] = [
        SceneNode(node_id="entrance", kind=VIEWPOINT,
                  position=(0.0, EYE_HEIGHT_M, 0.0), yaw=0.0, label="entrance"),
    ]
    for floor in range(layout.floors):
        nodes.append(SceneNode(
            node_id=f"floor-{floor}", kind=FLOOR_SLAB,
            position=(layout.corridor_length_m / 2, floor * layout.floor_height_m,
                      layout.shop_depth_m / 2),
            yaw=0.0,
        ))
    for shop in sorted(shops, key=lambda s: (s.floor, s.slot)):
        cx = (shop.slot + 0.5) * layout.shop_width_m
        base = shop.floor * layout.floor_height_m
        nodes.append(SceneNode(
            node_id=f"shopbox-{shop.id}", kind=SHOP_BOX,
            position=(cx, base + layout.floor_height_m / 2, half_w + layout.shop_depth_m / 2),
            yaw=0.0, shop_id=shop.id,
        ))
        nodes.append(SceneNode(
            node_id=f"door-{shop.id}", kind=DOOR,
            position=(cx, base + 1.0, half_w), yaw=-math.pi / 2, shop_id=shop.id,
        ))
        nodes.append(SceneNode(
            node_id=f"sign-{shop.id}", kind=SIGN,
            position=(cx, base + 2.5, half_w), yaw=-math.pi / 2,
            shop_id=shop.id, label=shop.name,
        ))
    return SceneGraph(layout=layout, nodes=tuple(nodes), entrance_id="entrance")


def corridor_contains(layout: MallLayout, point: tuple[float, float, float],
                      eps: float = 1e-9) -> bool:
    x, y, z = point
    return (-eps <= x <= layout.corridor_length_m + eps
            and -eps <= y <= layout.floors * layout.floor_height_m + eps
            and -layout.corridor_width_m / 2 - eps <= z <= layout.corridor_width_m / 2 + eps)


def door_pose(layout: MallLayout, door: SceneNode) -> Keyframe:
    """Camera pose in front of a door, facing it."""
    x, y, _ = door.position
    floor = int(round((y - 1.0) / layout.floor_height_m))
    return Keyframe(position=(x, _eye(layout, floor), _door_front_z(layout)),
                    yaw=math.pi / 2, dwell_s=DOOR_DWELL_S)


def compute_walkthrough(scene: SceneGraph) -> CameraPath:
    """Automatic stroll past every shop door.

    Starts at the entrance, faces each door for the dwell time in
    (floor asc, slot asc) order, rides up at the corridor end between floors,
    and returns to the entrance. Every straight segment stays inside the
    corridor volume; an empty mall is just the entrance keyframe.
    """
    layout = scene.layout
    entrance = Keyframe(position=scene.node(scene.entrance_id).position, yaw=0.0)
    doors = sorted(scene.doors(), key=lambda d: (d.position[1], d.position[0]))
    if not doors:
        return CameraPath(keyframes=(entrance,))
    frames = [entrance]
    end_x = layout.corridor_length_m
    current_floor = 0
    by_floor: dict[int, list[SceneNode]] = {}
    for door in doors:
        floor = int(round((door.position[1] - 1.0) / layout.floor_height_m))
        by_floor.setdefault(floor, []).append(door)
    for floor in sorted(by_floor):
        if floor != current_floor:
            frames.append(Keyframe(position=(end_x, _eye(layout, current_floor), 0.0), yaw=0.0))
            frames.append(Keyframe(position=(end_x, _eye(layout, floor), 0.0), yaw=0.0))
            current_floor = floor
        for door in by_floor[floor]:
            frames.append(door_pose(layout, door))
    if current_floor != 0:
        frames.append(Keyframe(position=(0.0, _eye(layout, current_floor), 0.0), yaw=0.0))
    frames.append(entrance)
    return CameraPath(keyframes=tuple(frames))


def camera_to_shop(scene: SceneGraph, shop_id: str) -> CameraPath:
    """Shortest corridor path from the entrance to just in front of a shop's
    door, with the floor change (if any) at the corridor end."""
    layout = scene.layout
    door = next((n for n in scene.nodes if n.kind == DOOR and n.shop_id == shop_id), None)
    if door is None:
        raise errors.UnknownShop(shop_id)
    entrance = Keyframe(position=scene.node(scene.entrance_id).position, yaw=0.0)
    floor = int(round((door.position[1] - 1.0) / layout.floor_height_m))
    frames = [entrance]
    if floor != 0:
        end_x = layout.corridor_length_m
        frames.append(Keyframe(position=(end_x, _eye(layout, 0), 0.0), yaw=0.0))
        frames.append(Keyframe(position=(end_x, _eye(layout, floor), 0.0), yaw=0.0))
    frames.append(door_pose(layout, door))
    return CameraPath(keyframes=tuple(frames))


# -- exporters ---------------------------------------------------------------


def _num(value: float) -> str:
    """Shortest exact decimal for a float (VRML output)."""
    return repr(float(value))


def _vrml_yaw(yaw: float) -> float:
    # VRML viewpoints look along -z by default; ours look along +x at yaw 0.
    return -yaw - math.pi / 2


_BOX_SIZES = {
    FLOOR_SLAB: lambda layout: (layout.corridor_length_m, 0.2,
                                layout.corridor_width_m + layout.shop_depth_m),
    SHOP_BOX: lambda layout: (layout.shop_width_m, layout.floor_height_m, layout.shop_depth_m),
    DOOR: lambda layout: (1.0, 2.0, 0.1),
    SIGN: lambda layout: (layout.shop_width_m * 0.6, 0.5, 0.1),
}


def export_vrml(scene: SceneGraph) -> str:
    """VRML97 subset: Transform, Shape/Box, Anchor, Viewpoint only.

    Door anchors link to the shop page path, so a VRML viewer can jump
    straight into the store.
    """
    out = [VRML_HEADER, f"# mall scene, {len(scene.nodes)} nodes"]
    for node in scene.nodes:
        x, y, z = (_num(c) for c in node.position)
        if node.kind == VIEWPOINT:
            out.append(
                f'Viewpoint {{ position {x} {y} {z} '
                f'orientation 0 1 0 {_num(_vrml_yaw(node.yaw))} '
                f'description "{node.label or node.node_id}" }}')
            continue
        sx, sy, sz = (_num(c) for c in _BOX_SIZES[node.kind](scene.layout))
        shape = f"Shape {{ geometry Box {{ size {sx} {sy} {sz} }} }}"
        if node.kind == DOOR:
            child = f'Anchor {{ url "/shops/{node.shop_id}" children [ {shape} ] }}'
        else:
            child = shape
        if node.label is not None:
            out.append(f"# {node.node_id} label: {node.label}")
        out.append(
            f"Transform {{ translation {x} {y} {z} "
            f"rotation 0 1 0 {_num(node.yaw)} children [ {child} ] }}")
    return "\n".join(out) + "\n"


def export_scene_doc(scene: SceneGraph) -> str:
    """Structured scene document for the UI; parse_scene_doc inverts it."""
    nodes = []
    for node in scene.nodes:
        entry: dict = {
            "id": node.node_id,
            "kind": node.kind,
            "position": list(node.position),
            "yaw": node.yaw,
        }
        if node.shop_id is not None:
            entry["shop_id"] = node.shop_id
        if node.label is not None:
            entry["label"] = node.label
        nodes.append(entry)
    doc = {"layout": scene.layout.to_dict(), "entrance": scene.entrance_id, "nodes": nodes}
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def parse_scene_doc(text: str) -> SceneGraph:
    data = json.loads(text)
    nodes = tuple(
        SceneNode(node_id=n["id"], kind=n["kind"], position=tuple(n["position"]),
                  yaw=n["yaw"], shop_id=n.get("shop_id"), label=n.get("label"))
        for n in data["nodes"]
    )
    return SceneGraph(layout=MallLayout.from_dict(data["layout"]), nodes=nodes,
                      entrance_id=data["entrance"])


def path_to_doc(path: CameraPath) -> dict:
    return {"keyframes": [
        {"position": list(k.position), "yaw": k.yaw, "dwell_s": k.dwell_s}
        for k in path.keyframes
    ]}
