"""Analytic tabletop simulator.

A grasped primitive (sphere, box or cylinder) descends onto the table plane z = 0
and slides. Contact patches come from dense surface sampling, depth from closed-form
ray casting through a pinhole camera, and optical flow from the known rigid motion.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .audiobank import ContactLabel
from .geometry import (
    fibonacci_disk,
    fibonacci_sphere,
    fibonacci_square,
    quat_from_axis_angle,
    quat_multiply,
    quat_normalize,
    quat_to_matrix,
    random_quat,
    split_counts,
)

EPS_CONTACT = 1e-3
MODE_TAU = 5e-3
N_SURFACE = 4096
MAX_DIAMETER = 0.10
REFERENCE_HEIGHT = 0.10


@dataclass(frozen=True)
class Sphere:
    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError("sphere radius must be positive")

    @property
    def diameter(self) -> float:
        return 2 * self.radius

    def surface_points(self, n: int) -> np.ndarray:
        return self.radius * fibonacci_sphere(n)

    def support(self, d: np.ndarray) -> np.ndarray:
        return self.radius * d / np.linalg.norm(d)

    def intersect(self, o: np.ndarray, d: np.ndarray) -> np.ndarray:
        a = np.einsum("ij,ij->i", d, d)
        b = d @ o
        c = o @ o - self.radius**2
        disc = b * b - a * c
        s = np.full(len(d), np.inf)
        ok = disc >= 0
        s_near = (-b[ok] - np.sqrt(disc[ok])) / a[ok]
        s[ok] = np.where(s_near > 0, s_near, np.inf)
        return s


@dataclass(frozen=True)
class Box:
    half_extents: tuple

    def __post_init__(self):
        he = tuple(float(v) for v in self.half_extents)
        if len(he) != 3 or min(he) <= 0:
            raise ValueError("box needs three positive half-extents")
        object.__setattr__(self, "half_extents", he)

    @property
    def diameter(self) -> float:
        return 2 * float(np.linalg.norm(self.half_extents))

    def surface_points(self, n: int) -> np.ndarray:
        hx, hy, hz = self.half_extents
        # faces: +-x, +-y, +-z with (axis, sign, in-plane half sizes)
        faces = [(0, s, (hy, hz)) for s in (1, -1)] + [(1, s, (hx, hz)) for s in (1, -1)] \
            + [(2, s, (hx, hy)) for s in (1, -1)]
        counts = split_counts(n, [4 * a * b for _, _, (a, b) in faces])
        out = []
        for (axis, sign, (a, b)), k in zip(faces, counts):
            uv = fibonacci_square(k) * 2 - 1
            pts = np.empty((k, 3))
            others = [i for i in range(3) if i != axis]
            pts[:, axis] = sign * self.half_extents[axis]
            pts[:, others[0]] = uv[:, 0] * a
            pts[:, others[1]] = uv[:, 1] * b
            out.append(pts)
        return np.concatenate(out)

    def support(self, d: np.ndarray) -> np.ndarray:
        return np.where(d >= 0, 1.0, -1.0) * np.array(self.half_extents)

    def intersect(self, o: np.ndarray, d: np.ndarray) -> np.ndarray:
        h = np.array(self.half_extents)
        with np.errstate(divide="ignore", invalid="ignore"):
            inv = 1.0 / d
            t1 = (-h - o) * inv
            t2 = (h - o) * inv
        t_near = np.nanmax(np.minimum(t1, t2), axis=1)
        t_far = np.nanmin(np.maximum(t1, t2), axis=1)
        hit = (t_near <= t_far) & (t_near > 0)
        return np.where(hit, t_near, np.inf)


@dataclass(frozen=True)
class Cylinder:
    """Solid cylinder with its axis along local z."""

    radius: float
    half_length: float

    def __post_init__(self):
        if not (self.radius > 0 and self.half_length > 0):
            raise ValueError("cylinder dimensions must be positive")

    @property
    def diameter(self) -> float:
        return 2 * float(np.hypot(self.radius, self.half_length))

    def surface_points(self, n: int) -> np.ndarray:
        r, hl = self.radius, self.half_length
        n_side, n_top, n_bot = split_counts(n, [2 * np.pi * r * 2 * hl, np.pi * r * r, np.pi * r * r])
        uv = fibonacci_square(n_side)
        theta = 2 * np.pi * uv[:, 1]
        side = np.stack([r * np.cos(theta), r * np.sin(theta), (uv[:, 0] * 2 - 1) * hl], axis=1)
        caps = []
        for k, z in ((n_top, hl), (n_bot, -hl)):
            xy = fibonacci_disk(k) * r
            caps.append(np.column_stack([xy, np.full(k, z)]))
        return np.concatenate([side, *caps])

    def support(self, d: np.ndarray) -> np.ndarray:
        radial = np.array([d[0], d[1], 0.0])
        norm = np.linalg.norm(radial)
        rim = radial * (self.radius / norm) if norm > 1e-12 else np.zeros(3)
        return rim + np.array([0.0, 0.0, self.half_length * (1.0 if d[2] >= 0 else -1.0)])

    def intersect(self, o: np.ndarray, d: np.ndarray) -> np.ndarray:
        r, hl = self.radius, self.half_length
        best = np.full(len(d), np.inf)
        a = d[:, 0] ** 2 + d[:, 1] ** 2
        b = o[0] * d[:, 0] + o[1] * d[:, 1]
        c = o[0] ** 2 + o[1] ** 2 - r * r
        disc = b * b - a * c
        ok = (disc >= 0) & (a > 1e-18)
        with np.errstate(divide="ignore", invalid="ignore"):
            s = np.where(ok, (-b - np.sqrt(np.where(ok, disc, 0))) / np.where(ok, a, 1), np.inf)
            z = o[2] + s * d[:, 2]
            side_ok = ok & (s > 0) & (np.abs(z) <= hl)
            best = np.where(side_ok, s, best)
            for zc in (hl, -hl):
                sc = (zc - o[2]) / d[:, 2]
                x = o[0] + sc * d[:, 0]
                y = o[1] + sc * d[:, 1]
                cap_ok = np.isfinite(sc) & (sc > 0) & (x * x + y * y <= r * r)
                best = np.where(cap_ok & (sc < best), sc, best)
        return best


Shape = Union[Sphere, Box, Cylinder]


@dataclass(frozen=True, eq=False)
class Primitive:
    shape: Shape
    rotation: np.ndarray  # unit quaternion (w, x, y, z)
    translation: np.ndarray  # metres, world frame

    def __post_init__(self):
        q = np.asarray(self.rotation, dtype=np.float64)
        t = np.asarray(self.translation, dtype=np.float64)
        if q.shape != (4,) or abs(np.linalg.norm(q) - 1) > 1e-9:
            raise ValueError("rotation must be a unit quaternion")
        if t.shape != (3,):
            raise ValueError("translation must be a 3-vector")
        if self.shape.diameter > MAX_DIAMETER + 1e-12:
            raise ValueError(f"primitive diameter {self.shape.diameter:.4f} m exceeds {MAX_DIAMETER} m")
        object.__setattr__(self, "rotation", q)
        object.__setattr__(self, "translation", t)

    @functools.cached_property
    def matrix(self) -> np.ndarray:
        return quat_to_matrix(self.rotation)

    def to_world(self, pts: np.ndarray) -> np.ndarray:
        return pts @ self.matrix.T + self.translation

    def to_local(self, pts: np.ndarray) -> np.ndarray:
        return (pts - self.translation) @ self.matrix

    def lowest_point(self) -> np.ndarray:
        down_local = self.matrix.T @ np.array([0.0, 0.0, -1.0])
        return self.to_world(self.shape.support(down_local)[None])[0]

    def moved(self, translation) -> "Primitive":
        return Primitive(self.shape, self.rotation, np.asarray(translation, dtype=np.float64))

    def with_bottom_at(self, height: float) -> "Primitive":
        """Same orientation and x-y, translated so the lowest point sits at ``height``."""
        offset = self.translation[2] - self.lowest_point()[2]
        return self.moved([self.translation[0], self.translation[1], height + offset])


@dataclass(frozen=True, eq=False)
class CameraModel:
    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int
    rotation: np.ndarray  # world -> camera, 3x3 (x right, y down, z forward)
    translation: np.ndarray

    def __post_init__(self):
        if not (self.fx > 0 and self.fy > 0):
            raise ValueError("focal lengths must be positive")
        if not (0 <= self.cx < self.width and 0 <= self.cy < self.height):
            raise ValueError("principal point must lie inside the image")
        object.__setattr__(self, "rotation", np.asarray(self.rotation, dtype=np.float64))
        object.__setattr__(self, "translation", np.asarray(self.translation, dtype=np.float64))

    @property
    def shape(self) -> tuple:
        return (self.height, self.width)

    @functools.cached_property
    def center(self) -> np.ndarray:
        return -self.rotation.T @ self.translation

    def to_camera(self, pts: np.ndarray) -> np.ndarray:
        return pts @ self.rotation.T + self.translation

    def project(self, pts: np.ndarray) -> tuple:
        """World points -> (u, v, depth); u is the column and v the row coordinate."""
        pc = self.to_camera(np.atleast_2d(pts))
        z = pc[:, 2]
        return self.fx * pc[:, 0] / z + self.cx, self.fy * pc[:, 1] / z + self.cy, z

    @functools.cached_property
    def pixel_rays(self) -> np.ndarray:
        """World-frame ray directions scaled so the ray parameter equals camera depth."""
        v, u = np.mgrid[0:self.height, 0:self.width].astype(np.float64)
        dc = np.stack([(u - self.cx) / self.fx, (v - self.cy) / self.fy, np.ones_like(u)], axis=-1)
        return dc.reshape(-1, 3) @ self.rotation

    def plane_footprint(self, depth: float) -> float:
        """Approximate ground distance spanned by one pixel at ``depth``, worst axis."""
        f = self.center[2] / depth  # sin of the ray's grazing angle, approximately
        return depth / min(self.fx, self.fy) / max(f, 1e-6)


def look_at_camera(
    width: int = 64,
    height: int = 64,
    fx: float = 80.0,
    fy: float = 80.0,
    cx: float = 32.0,
    cy: float = 32.0,
    pitch_deg: float = 45.0,
    standoff: float = 0.8,
    target=(0.0, 0.0, 0.0),
) -> CameraModel:
    """Camera on the -y side of ``target``, pitched down by ``pitch_deg``."""
    target = np.asarray(target, dtype=np.float64)
    p = np.deg2rad(pitch_deg)
    center = target + standoff * np.array([0.0, -np.cos(p), np.sin(p)])
    fwd = (target - center) / standoff
    right = np.cross(fwd, [0.0, 0.0, 1.0])
    if np.linalg.norm(right) < 1e-9:  # looking straight down
        right = np.array([1.0, 0.0, 0.0])
    right /= np.linalg.norm(right)
    down = np.cross(fwd, right)
    R = np.stack([right, down, fwd])
    return CameraModel(fx, fy, cx, cy, width, height, R, -R @ center)


@dataclass(frozen=True, eq=False)
class ContactPatch:
    points: np.ndarray  # (n, 3) on the plane z = 0
    label: ContactLabel

    @property
    def empty(self) -> bool:
        return len(self.points) == 0


@dataclass(frozen=True, eq=False)
class SceneFrame:
    primitive: Primitive
    ee_pose: np.ndarray  # (x, y, z, qw, qx, qy, qz)
    touching: bool
    phase: str = "slide"

    def __post_init__(self):
        ee = np.asarray(self.ee_pose, dtype=np.float64)
        if ee.shape != (7,) or abs(np.linalg.norm(ee[3:]) - 1) > 1e-9:
            raise ValueError("end-effector pose must be position + unit quaternion")
        object.__setattr__(self, "ee_pose", ee)

    def to_json(self) -> dict:
        s = self.primitive.shape
        if isinstance(s, Sphere):
            shape = {"kind": "sphere", "radius": s.radius}
        elif isinstance(s, Box):
            shape = {"kind": "box", "half_extents": list(s.half_extents)}
        else:
            shape = {"kind": "cylinder", "radius": s.radius, "half_length": s.half_length}
        return {"shape": shape, "rotation": self.primitive.rotation.tolist(),
                "translation": self.primitive.translation.tolist(),
                "ee_pose": self.ee_pose.tolist(), "touching": self.touching, "phase": self.phase}

    @classmethod
    def from_json(cls, d: dict) -> "SceneFrame":
        sd = d["shape"]
        if sd["kind"] == "sphere":
            shape = Sphere(sd["radius"])
        elif sd["kind"] == "box":
            shape = Box(tuple(sd["half_extents"]))
        elif sd["kind"] == "cylinder":
            shape = Cylinder(sd["radius"], sd["half_length"])
        else:
            raise ValueError(f"unknown shape kind {sd['kind']!r}")
        prim = Primitive(shape, np.array(d["rotation"]), np.array(d["translation"]))
        return cls(prim, np.array(d["ee_pose"]), bool(d["touching"]), d.get("phase", "slide"))


@dataclass(frozen=True)
class SceneConfig:
    n_frames: int = 60
    descend_frames: int = 15
    near_contact_frac: float = 0.2
    start_height: float = 0.04
    hover_max: float = 0.02
    workspace_half: float = 0.06
    slide_speed: tuple = (0.001, 0.003)  # metres per frame
    heading_spread_deg: float = 60.0
    shape_weights: tuple = (0.3, 0.4, 0.3)  # sphere, box, cylinder
    sphere_radius: tuple = (0.015, 0.04)
    box_half_extent: tuple = (0.01, 0.028)
    cylinder_radius: tuple = (0.01, 0.025)
    cylinder_half_length: tuple = (0.015, 0.04)
    grasp_offset: float = 0.02
    eps_contact: float = EPS_CONTACT
    mode_tau: float = MODE_TAU
    n_surface: int = N_SURFACE
    camera: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.n_frames < 2:
            raise ValueError("episodes need at least 2 frames")
        if not 1 <= self.descend_frames <= self.n_frames:
            raise ValueError("descend_frames must lie in [1, n_frames]")
        if not 0 <= self.near_contact_frac <= 1:
            raise ValueError("near_contact_frac must lie in [0, 1]")
        if not self.hover_max > self.eps_contact:
            raise ValueError("hover_max must exceed eps_contact")

    def make_camera(self) -> CameraModel:
        return look_at_camera(**self.camera)


# ---------------------------------------------------------------- contact


@functools.lru_cache(maxsize=256)
def _surface_cache(shape: Shape, n: int) -> np.ndarray:
    pts = shape.surface_points(n)
    pts.setflags(write=False)
    return pts


def contact_patch(p: Primitive, eps_contact: float = EPS_CONTACT, n_surface: int = N_SURFACE,
                  tau: float = MODE_TAU) -> ContactPatch:
    """Surface samples within ``eps_contact`` of the table, projected onto z = 0.

    The analytic lowest point joins the sample set when it is in contact, so sharp
    vertex contacts never fall between samples.
    """
    if not eps_contact > 0:
        raise ValueError("eps_contact must be positive")
    world = p.to_world(_surface_cache(p.shape, n_surface))
    world = np.vstack([world, p.lowest_point()[None]])
    pts = world[world[:, 2] <= eps_contact].copy()
    pts[:, 2] = 0.0
    return ContactPatch(pts, classify_mode(pts, tau))


def classify_mode(points: np.ndarray, tau: float = MODE_TAU) -> ContactLabel:
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    if len(pts) == 0:
        return ContactLabel.FREE
    cov = np.cov(pts[:, :2].T, bias=True) if len(pts) > 1 else np.zeros((2, 2))
    lam = np.sort(np.clip(np.linalg.eigvalsh(cov), 0.0, None))[::-1]
    s1, s2 = np.sqrt(lam)
    if s1 < tau:
        return ContactLabel.POINT
    if s2 < tau:
        return ContactLabel.LINE
    return ContactLabel.PATCH


# ---------------------------------------------------------------- rendering


def raycast(primitive: Primitive | None, cam: CameraModel) -> tuple:
    """Per-pixel depth, object-hit mask and world hit points (all (H, W[, 3]))."""
    o = cam.center
    d = cam.pixel_rays
    if d[:, 2].max() >= 0:
        raise ValueError("camera sees above the horizon; the plane would leave holes")
    s = -o[2] / d[:, 2]
    hit_obj = np.zeros(len(d), dtype=bool)
    if primitive is not None:
        s_obj = primitive.shape.intersect(primitive.to_local(o[None])[0], d @ primitive.matrix)
        hit_obj = s_obj < s
        s = np.where(hit_obj, s_obj, s)
    pts = o + s[:, None] * d
    h, w = cam.shape
    return s.reshape(h, w), hit_obj.reshape(h, w), pts.reshape(h, w, 3)


def render_depth(frame: SceneFrame | None, cam: CameraModel) -> np.ndarray:
    """(1, H, W) float32 depth along the optical axis, metres."""
    depth, _, _ = raycast(None if frame is None else frame.primitive, cam)
    return depth.astype(np.float32)[None]


def reference_primitive(frame: SceneFrame, height: float = REFERENCE_HEIGHT) -> Primitive:
    """Grasped primitive lifted clear of the table at the workspace origin."""
    p = frame.primitive.moved([0.0, 0.0, frame.primitive.translation[2]])
    return p.with_bottom_at(height)


def reference_ee(frame: SceneFrame, height: float = REFERENCE_HEIGHT) -> np.ndarray:
    ref = reference_primitive(frame, height)
    return ref.translation + (frame.ee_pose[:3] - frame.primitive.translation)


def render_reference(frame: SceneFrame, cam: CameraModel, height: float = REFERENCE_HEIGHT) -> np.ndarray:
    depth, _, _ = raycast(reference_primitive(frame, height), cam)
    return depth.astype(np.float32)[None]


def analytic_flow(frame_t: SceneFrame, frame_t1: SceneFrame, cam: CameraModel) -> np.ndarray:
    """(2, H, W) float32 flow (du, dv) in px/frame of object pixels; background 0."""
    _, hit, pts = raycast(frame_t.primitive, cam)
    flow = np.zeros((2, *cam.shape), dtype=np.float64)
    if hit.any():
        local = frame_t.primitive.to_local(pts[hit])
        u1, v1, _ = cam.project(frame_t1.primitive.to_world(local))
        v0, u0 = np.nonzero(hit)
        flow[0][hit] = u1 - u0
        flow[1][hit] = v1 - v0
    return flow.astype(np.float32)


_PLUS = ((0, 0), (1, 0), (-1, 0), (0, 1), (0, -1))


def dilate_plus(mask: np.ndarray) -> np.ndarray:
    out = np.zeros_like(mask)
    h, w = mask.shape
    for dr, dc in _PLUS:
        out[max(dr, 0):h + min(dr, 0), max(dc, 0):w + min(dc, 0)] |= \
            mask[max(-dr, 0):h + min(-dr, 0), max(-dc, 0):w + min(-dc, 0)]
    return out


def rasterize_mask(patch: ContactPatch, cam: CameraModel) -> np.ndarray:
    """(H, W) float32 binary mask of the projected contact points, radius-1 dilated."""
    mask = np.zeros(cam.shape, dtype=bool)
    if not patch.empty:
        u, v, _ = cam.project(patch.points)
        c = np.rint(u).astype(int)
        r = np.rint(v).astype(int)
        ok = (r >= 0) & (r < cam.height) & (c >= 0) & (c < cam.width)
        mask[r[ok], c[ok]] = True
    return dilate_plus(mask).astype(np.float32)


def crop_origin(center_px, crop_side: int) -> tuple:
    """Top-left (row, col) of a ``crop_side`` window centred on (u, v)."""
    u, v = center_px
    return int(np.rint(v)) - crop_side // 2, int(np.rint(u)) - crop_side // 2


def coord_channels(origin, crop_side: int, full_shape) -> np.ndarray:
    """x, y in [-1, 1] normalised over the full image, and their radius."""
    h, w = full_shape
    rows = origin[0] + np.arange(crop_side)
    cols = origin[1] + np.arange(crop_side)
    x = np.clip((cols - w / 2) / (w / 2), -1, 1)
    y = np.clip((rows - h / 2) / (h / 2), -1, 1)
    xx, yy = np.meshgrid(x, y)
    return np.stack([xx, yy, np.sqrt(xx**2 + yy**2)]).astype(np.float32)


def crop_with_coords(img: np.ndarray, center_px, crop_side: int) -> np.ndarray:
    """Zero-padded crop of a (C, H, W) image plus three coordinate channels."""
    if crop_side < 1:
        raise ValueError("crop side must be >= 1")
    img = np.asarray(img)
    if img.ndim == 2:
        img = img[None]
    c, h, w = img.shape
    r0, c0 = crop_origin(center_px, crop_side)
    out = np.zeros((c, crop_side, crop_side), dtype=np.float32)
    rs, re = max(r0, 0), min(r0 + crop_side, h)
    cs, ce = max(c0, 0), min(c0 + crop_side, w)
    if rs < re and cs < ce:
        out[:, rs - r0:re - r0, cs - c0:ce - c0] = img[:, rs:re, cs:ce]
    return np.concatenate([out, coord_channels((r0, c0), crop_side, (h, w))])


# ---------------------------------------------------------------- episodes


def _uniform(rng, lo_hi):
    return float(rng.uniform(*lo_hi))


def sample_primitive(rng: np.random.Generator, cfg: SceneConfig) -> Primitive:
    """Random primitive in an orientation drawn from its contact-mode family."""
    kind = rng.choice(3, p=np.asarray(cfg.shape_weights) / np.sum(cfg.shape_weights))
    yaw = quat_from_axis_angle([0, 0, 1], rng.uniform(0, 2 * np.pi))
    x_axis = [1.0, 0.0, 0.0]
    if kind == 0:
        shape = Sphere(_uniform(rng, cfg.sphere_radius))
        tilt = random_quat(rng)
    elif kind == 1:
        shape = Box(tuple(_uniform(rng, cfg.box_half_extent) for _ in range(3)))
        mode = rng.integers(3)
        if mode == 0:  # face down
            tilt = np.array([1.0, 0.0, 0.0, 0.0])
        elif mode == 1:  # edge down
            tilt = quat_from_axis_angle(x_axis, np.deg2rad(rng.uniform(25, 65)))
        else:  # vertex down
            tilt = quat_multiply(quat_from_axis_angle([0, 1, 0], np.deg2rad(rng.uniform(20, 35))),
                                 quat_from_axis_angle(x_axis, np.deg2rad(rng.uniform(20, 35))))
    else:
        shape = Cylinder(_uniform(rng, cfg.cylinder_radius), _uniform(rng, cfg.cylinder_half_length))
        mode = rng.integers(3)
        if mode == 0:  # upright, flat cap down
            tilt = np.array([1.0, 0.0, 0.0, 0.0])
        elif mode == 1:  # lying on its side
            tilt = quat_from_axis_angle(x_axis, np.pi / 2)
        else:  # tipped onto its rim
            tilt = quat_from_axis_angle(x_axis, np.deg2rad(rng.uniform(30, 60)))
    q = quat_normalize(quat_multiply(yaw, tilt))
    return Primitive(shape, q, np.zeros(3)).with_bottom_at(0.0)


def sample_episode(seed: int, cfg: SceneConfig = SceneConfig()) -> list:
    """Descend-then-slide episode; near-contact episodes stop above the table."""
    rng = np.random.default_rng(seed)
    prim = sample_primitive(rng, cfg)
    near = bool(rng.random() < cfg.near_contact_frac)
    target = float(rng.uniform(1.5 * cfg.eps_contact, cfg.hover_max)) if near else 0.0
    start_xy = rng.uniform(-cfg.workspace_half, cfg.workspace_half, size=2)
    # slide back across the workspace so the object stays in view
    inward = np.arctan2(-start_xy[1], -start_xy[0])
    heading = inward + np.deg2rad(rng.uniform(-cfg.heading_spread_deg, cfg.heading_spread_deg))
    velocity = _uniform(rng, cfg.slide_speed) * np.array([np.cos(heading), np.sin(heading)])

    top = prim.to_world(prim.shape.support(prim.matrix.T @ np.array([0.0, 0.0, 1.0]))[None])[0, 2]
    grasp = np.array([0.0, 0.0, top - prim.translation[2] + cfg.grasp_offset])

    frames = []
    nd = cfg.descend_frames
    for i in range(cfg.n_frames):
        if i < nd:
            frac = i / (nd - 1) if nd > 1 else 1.0
            h = cfg.start_height + (target - cfg.start_height) * frac
            xy = start_xy
            phase = "descend"
        else:
            h = target
            xy = start_xy + velocity * (i - nd + 1)
            phase = "hover" if near else "slide"
        p = prim.moved([xy[0], xy[1], 0.0]).with_bottom_at(h)
        ee = np.concatenate([p.translation + grasp, p.rotation])
        frames.append(SceneFrame(p, ee, bool(h <= cfg.eps_contact), phase))
    return frames


def frame_label(frame: SceneFrame, cfg: SceneConfig = SceneConfig()) -> ContactPatch:
    return contact_patch(frame.primitive, cfg.eps_contact, cfg.n_surface, cfg.mode_tau)
