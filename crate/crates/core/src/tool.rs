//! Block-chain tool assemblies.
//!
//! A tool is a chain of boxes appended relative to the previous block, rooted
//! at a wrist anchor. Two chains (left/right wrist) can coexist in one
//! assembly; each block carries its wrist tag and its parent is the previous
//! block of the same wrist. Illegal block parameters are clamped, never
//! rejected, so policy exploration stays smooth.

use crate::geom::{compose, wrap_angle, Aabb, Obb, Pose2, Vec2};
use crate::scalar::Scalar;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Maximum block extent per side (meters).
pub const BLOCK_MAX_EXTENT: f64 = 0.10;
/// Minimum block extent; the clamp floor for the open interval (0, s_max].
pub const BLOCK_MIN_EXTENT: f64 = 0.005;
/// Maximum relative offset between consecutive blocks (meters).
pub const OFFSET_MAX: f64 = 0.12;
/// Maximum number of blocks in an assembly (the build horizon).
pub const BUILD_CAP: usize = 12;
/// Half-diagonal bound of any legal block; block centers are kept this far
/// inside the workspace so every derived box stays in bounds.
pub const CENTER_MARGIN: f64 = 0.0708;
/// Default number of handle blocks per wrist chain.
pub const DEFAULT_HANDLE_COUNT: usize = 2;
/// Lateral anchor offsets separating the two build chains at the wrist.
pub const WRIST_LATERAL_OFFSET: f64 = 0.12;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ToolError {
    #[error("assembly already holds {BUILD_CAP} blocks")]
    AtCapacity,
    #[error("operation requires at least one block")]
    EmptyTool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum WristSide {
    Left,
    Right,
}

impl WristSide {
    pub const BOTH: [WristSide; 2] = [WristSide::Left, WristSide::Right];
}

/// One appended block: placement relative to its parent frame plus extents.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockSpec<R> {
    pub rel_offset: Vec2<R>,
    pub rel_angle: R,
    /// Full extents (width, height); the box half-extents are size/2.
    pub size: Vec2<R>,
    pub wrist: WristSide,
}

impl<R: Scalar> BlockSpec<R> {
    /// Clamp size and offset into their legal ranges and wrap the angle.
    /// Idempotent: clamped values land strictly inside their limits so a
    /// second pass (e.g. after a JSON reload) changes nothing.
    pub fn clamped(mut self) -> Self {
        let s_min = R::c(BLOCK_MIN_EXTENT);
        let s_max = R::c(BLOCK_MAX_EXTENT);
        self.size = Vec2::new(
            self.size.x.max(s_min).min(s_max),
            self.size.y.max(s_min).min(s_max),
        );
        let norm = self.rel_offset.norm();
        let r_max = R::c(OFFSET_MAX);
        if norm > r_max {
            let shrink = R::one() - R::c(1e-12);
            self.rel_offset = self.rel_offset.scale(r_max * shrink / norm);
        }
        self.rel_angle = wrap_angle(self.rel_angle);
        self
    }

    fn rel_pose(&self) -> Pose2<R> {
        Pose2 { position: self.rel_offset, angle: self.rel_angle }
    }

    fn half_extents(&self) -> Vec2<R> {
        self.size.scale(R::c(0.5))
    }
}

/// Detached tool provenance: built by the agent or drawn from the candidate
/// object library.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Provenance {
    Built,
    Library,
}

/// A free rigid object: shapes in its own frame, a world pose, and the pose a
/// wrist must take (in the object frame) to hold it the way it was built.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FreeObject<R> {
    pub shapes: Vec<Obb<R>>,
    pub pose: Pose2<R>,
    pub grasp_pose: Pose2<R>,
    pub provenance: Provenance,
}

impl<R: Scalar> FreeObject<R> {
    /// World-frame shapes at the current pose.
    pub fn world_shapes(&self) -> Vec<Obb<R>> {
        self.shapes.iter().map(|s| s.transformed(self.pose)).collect()
    }

    /// World pose a wrist must reach to grasp the object as built.
    pub fn world_grasp_pose(&self) -> Pose2<R> {
        compose(self.pose, self.grasp_pose)
    }

    /// Shapes re-expressed in the wrist frame once grasped: the object
    /// becomes an embodiment extension of whoever holds it.
    pub fn shapes_in_wrist_frame(&self) -> Vec<Obb<R>> {
        let inv = self.grasp_pose.inverse();
        self.shapes.iter().map(|s| s.transformed(inv)).collect()
    }
}

/// Chain-of-blocks embodiment extension rooted at a wrist anchor.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ToolAssembly<R> {
    pub wrist_pose: Pose2<R>,
    pub bounds: Aabb<R>,
    blocks: Vec<BlockSpec<R>>,
    requested_handle_count: usize,
}

impl<R: Scalar> ToolAssembly<R> {
    /// The wrist position is pulled inside the workspace far enough that both
    /// chain anchors land in the block-center margin box; that keeps the
    /// offset clamp and the bounds clamp simultaneously satisfiable.
    pub fn new(wrist_pose: Pose2<R>, bounds: Aabb<R>) -> Self {
        let m = R::c(CENTER_MARGIN + WRIST_LATERAL_OFFSET);
        let p = wrist_pose.position;
        let clamped = Vec2::new(
            p.x.max(bounds.min.x + m).min(bounds.max.x - m),
            p.y.max(bounds.min.y + m).min(bounds.max.y - m),
        );
        let wrist_pose = Pose2 { position: clamped, angle: wrist_pose.angle };
        Self { wrist_pose, bounds, blocks: Vec::new(), requested_handle_count: DEFAULT_HANDLE_COUNT }
    }

    pub fn with_handle_count(mut self, k: usize) -> Self {
        self.requested_handle_count = k.max(1);
        self
    }

    pub fn blocks(&self) -> &[BlockSpec<R>] {
        &self.blocks
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn side_len(&self, side: WristSide) -> usize {
        self.blocks.iter().filter(|b| b.wrist == side).count()
    }

    /// Effective handle count: requested K, capped so the stored value never
    /// exceeds max(len, 1).
    pub fn handle_count(&self) -> usize {
        self.requested_handle_count.min(self.len().max(1))
    }

    pub fn requested_handle_count(&self) -> usize {
        self.requested_handle_count
    }

    /// Build anchor for a wrist chain: the wrist pose shifted laterally so
    /// the two chains never share an origin.
    pub fn anchor_pose(&self, side: WristSide) -> Pose2<R> {
        let dy = match side {
            WristSide::Left => R::c(WRIST_LATERAL_OFFSET),
            WristSide::Right => R::c(-WRIST_LATERAL_OFFSET),
        };
        compose(self.wrist_pose, Pose2 { position: Vec2::new(R::zero(), dy), angle: R::zero() })
    }

    /// Block frames of one chain relative to an arbitrary anchor.
    fn chain_frames(&self, side: WristSide, anchor: Pose2<R>) -> Vec<(Pose2<R>, BlockSpec<R>)> {
        let mut frames = Vec::new();
        let mut parent = anchor;
        for block in self.blocks.iter().filter(|b| b.wrist == side) {
            let frame = compose(parent, block.rel_pose());
            frames.push((frame, *block));
            parent = frame;
        }
        frames
    }

    fn frames_to_obbs(frames: &[(Pose2<R>, BlockSpec<R>)]) -> Vec<Obb<R>> {
        frames
            .iter()
            .map(|(f, b)| Obb { center: f.position, half_extents: b.half_extents(), angle: f.angle })
            .collect()
    }

    /// Append a block after clamping it into its legal ranges; the block's
    /// world center is additionally pulled inside the workspace margin box so
    /// every derived box stays in bounds.
    pub fn append_block(&mut self, spec: BlockSpec<R>) -> Result<(), ToolError> {
        if self.blocks.len() >= BUILD_CAP {
            return Err(ToolError::AtCapacity);
        }
        let mut spec = spec.clamped();

        // Parent frame: previous block of the same wrist, else the anchor.
        let chain = self.chain_frames(spec.wrist, self.anchor_pose(spec.wrist));
        let parent = chain.last().map(|(f, _)| *f).unwrap_or_else(|| self.anchor_pose(spec.wrist));

        // The clamp target sits 1e-9 inside the margin box so the reloaded
        // offset re-transforms to a point still inside it: append is a
        // fixpoint on already-clamped blocks.
        let margin = R::c(CENTER_MARGIN);
        let nudge = R::c(1e-9);
        let lo = Vec2::new(self.bounds.min.x + margin, self.bounds.min.y + margin);
        let hi = Vec2::new(self.bounds.max.x - margin, self.bounds.max.y - margin);
        let desired = parent.transform(spec.rel_offset);
        let clamped_world = Vec2::new(
            desired.x.max(lo.x + nudge).min(hi.x - nudge),
            desired.y.max(lo.y + nudge).min(hi.y - nudge),
        );
        if clamped_world != desired {
            // Component-wise clamping toward a box containing the parent
            // center never increases the offset norm, so the r_max clamp
            // already applied still holds.
            spec.rel_offset = parent.inverse_transform(clamped_world);
        }

        self.blocks.push(spec);
        Ok(())
    }

    /// World-frame boxes of one wrist chain, in append order.
    pub fn world_shapes(&self, side: WristSide) -> Vec<Obb<R>> {
        Self::frames_to_obbs(&self.chain_frames(side, self.anchor_pose(side)))
    }

    /// World-frame boxes of both chains: left chain first, then right.
    pub fn all_world_shapes(&self) -> Vec<Obb<R>> {
        let mut out = self.world_shapes(WristSide::Left);
        out.extend(self.world_shapes(WristSide::Right));
        out
    }

    /// Chain boxes expressed in the wrist-body frame (anchor at identity):
    /// the shape set a kinematic wrist body carries when this chain is
    /// attached to it.
    pub fn body_frame_shapes(&self, side: WristSide) -> Vec<Obb<R>> {
        Self::frames_to_obbs(&self.chain_frames(side, Pose2::identity()))
    }

    /// First min(handle_count, chain length) blocks per wrist, world frame,
    /// left chain first. The grasping region of the tool.
    pub fn handle_region(&self) -> Result<Vec<Obb<R>>, ToolError> {
        if self.blocks.is_empty() {
            return Err(ToolError::EmptyTool);
        }
        let k = self.handle_count();
        let mut out = Vec::new();
        for side in WristSide::BOTH {
            let shapes = self.world_shapes(side);
            out.extend(shapes.into_iter().take(k));
        }
        Ok(out)
    }

    /// Handle boxes of a single chain (first K of that side), world frame.
    pub fn handle_region_side(&self, side: WristSide) -> Vec<Obb<R>> {
        self.world_shapes(side).into_iter().take(self.handle_count()).collect()
    }

    /// Detach one chain into a free object placed at `placement`.
    ///
    /// The object frame is block 0's build frame; `grasp_pose` is the pose the
    /// build anchor occupied, expressed in that frame, so re-attaching a wrist
    /// at `world_grasp_pose` reproduces the built geometry exactly.
    pub fn detach(&self, side: WristSide, placement: Pose2<R>) -> Result<FreeObject<R>, ToolError> {
        let anchor = self.anchor_pose(side);
        let frames = self.chain_frames(side, anchor);
        let (block0_frame, _) = *frames.first().ok_or(ToolError::EmptyTool)?;
        let inv0 = block0_frame.inverse();
        let shapes = frames
            .iter()
            .map(|(f, b)| {
                let local = compose(inv0, *f);
                Obb { center: local.position, half_extents: b.half_extents(), angle: local.angle }
            })
            .collect();
        Ok(FreeObject {
            shapes,
            pose: placement,
            grasp_pose: compose(inv0, anchor),
            provenance: Provenance::Built,
        })
    }
}

// --- Tool JSON wire schema -------------------------------------------------
//
// {"blocks":[{"dx","dy","dtheta","w","h","wrist"}],"handle_count"}
// Round-trip exact: serde_json prints shortest-round-trip decimals.

#[derive(Serialize, Deserialize)]
struct BlockWire {
    dx: f64,
    dy: f64,
    dtheta: f64,
    w: f64,
    h: f64,
    wrist: WristSide,
}

#[derive(Serialize, Deserialize)]
struct ToolWire {
    blocks: Vec<BlockWire>,
    handle_count: usize,
}

impl ToolAssembly<f64> {
    pub fn to_json(&self) -> String {
        let wire = ToolWire {
            blocks: self
                .blocks
                .iter()
                .map(|b| BlockWire {
                    dx: b.rel_offset.x,
                    dy: b.rel_offset.y,
                    dtheta: b.rel_angle,
                    w: b.size.x,
                    h: b.size.y,
                    wrist: b.wrist,
                })
                .collect(),
            handle_count: self.requested_handle_count,
        };
        serde_json::to_string(&wire).expect("tool schema serializes")
    }

    /// Rebuild from wire JSON. Blocks re-run the append path (clamping is
    /// idempotent on legal specs, so a saved legal tool loads unchanged).
    pub fn from_json(
        json: &str,
        wrist_pose: Pose2<f64>,
        bounds: Aabb<f64>,
    ) -> Result<Self, serde_json::Error> {
        let wire: ToolWire = serde_json::from_str(json)?;
        let mut tool = ToolAssembly::new(wrist_pose, bounds).with_handle_count(wire.handle_count);
        for b in wire.blocks {
            let spec = BlockSpec {
                rel_offset: Vec2::new(b.dx, b.dy),
                rel_angle: b.dtheta,
                size: Vec2::new(b.w, b.h),
                wrist: b.wrist,
            };
            // Capacity can't overflow: the wire format caps at BUILD_CAP on save.
            let _ = tool.append_block(spec);
        }
        Ok(tool)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::DetRng;

    type V = Vec2<f64>;

    fn workspace() -> Aabb<f64> {
        Aabb::new(V::new(-0.25, -0.75), V::new(1.25, 0.75))
    }

    fn tool_at_origin() -> ToolAssembly<f64> {
        ToolAssembly::new(Pose2::identity(), workspace())
    }

    fn block(dx: f64, dy: f64, dtheta: f64, w: f64, h: f64) -> BlockSpec<f64> {
        BlockSpec { rel_offset: V::new(dx, dy), rel_angle: dtheta, size: V::new(w, h), wrist: WristSide::Right }
    }

    #[test]
    fn first_block_frame_composes_from_anchor() {
        let mut t = tool_at_origin();
        t.append_block(block(0.05, 0.0, 0.0, 0.08, 0.02)).unwrap();
        let shapes = t.world_shapes(WristSide::Right);
        assert_eq!(shapes.len(), 1);
        let anchor = t.anchor_pose(WristSide::Right);
        assert!((shapes[0].center - (anchor.position + V::new(0.05, 0.0))).norm() < 1e-12);
        assert_eq!(shapes[0].half_extents, V::new(0.04, 0.01));
    }

    #[test]
    fn oversized_block_clamps_to_max_extent() {
        let mut t = tool_at_origin();
        t.append_block(block(0.0, 0.0, 0.0, 0.5, 0.5)).unwrap();
        assert_eq!(t.blocks()[0].size, V::new(0.10, 0.10));
    }

    #[test]
    fn capacity_enforced_on_thirteenth_append() {
        let mut t = tool_at_origin();
        for _ in 0..BUILD_CAP {
            t.append_block(block(0.05, 0.0, 0.0, 0.04, 0.04)).unwrap();
        }
        assert_eq!(t.append_block(block(0.05, 0.0, 0.0, 0.04, 0.04)), Err(ToolError::AtCapacity));
    }

    #[test]
    fn append_is_identity_on_already_legal_specs() {
        let mut t = tool_at_origin();
        let spec = block(0.06, -0.03, 0.4, 0.07, 0.02);
        t.append_block(spec).unwrap();
        assert_eq!(t.blocks()[0], spec);
    }

    #[test]
    fn straight_chain_of_three_collinear_centers() {
        let mut t = tool_at_origin();
        for _ in 0..3 {
            t.append_block(block(0.08, 0.0, 0.0, 0.06, 0.02)).unwrap();
        }
        let shapes = t.world_shapes(WristSide::Right);
        let a = t.anchor_pose(WristSide::Right).position;
        for (i, s) in shapes.iter().enumerate() {
            let expected = a + V::new(0.08 * (i + 1) as f64, 0.0);
            assert!((s.center - expected).norm() < 1e-12, "block {i}");
        }
    }

    #[test]
    fn l_chain_matches_hand_computed_se2() {
        // Two straight blocks then a quarter-turn block: the third frame is
        // compose(compose(a, b), c) computed by hand.
        let mut t = tool_at_origin();
        t.append_block(block(0.08, 0.0, 0.0, 0.06, 0.02)).unwrap();
        t.append_block(block(0.08, 0.0, 0.0, 0.06, 0.02)).unwrap();
        t.append_block(block(0.0, 0.08, std::f64::consts::FRAC_PI_2, 0.06, 0.02)).unwrap();
        let shapes = t.world_shapes(WristSide::Right);
        let a = t.anchor_pose(WristSide::Right).position;
        assert!((shapes[2].center - (a + V::new(0.16, 0.08))).norm() < 1e-12);
        assert!((shapes[2].angle - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
    }

    #[test]
    fn handle_region_rules() {
        let mut t = tool_at_origin();
        t.append_block(block(0.05, 0.0, 0.0, 0.05, 0.05)).unwrap();
        assert_eq!(t.handle_region().unwrap().len(), 1, "1-block tool, K=2 -> that one block");

        for _ in 0..4 {
            t.append_block(block(0.05, 0.0, 0.0, 0.05, 0.05)).unwrap();
        }
        let handles = t.handle_region().unwrap();
        let all = t.world_shapes(WristSide::Right);
        assert_eq!(handles.len(), 2);
        assert_eq!(handles[0], all[0]);
        assert_eq!(handles[1], all[1]);

        let empty = tool_at_origin();
        assert_eq!(empty.handle_region(), Err(ToolError::EmptyTool));
    }

    #[test]
    fn two_wrist_tool_handles_come_from_both_chains() {
        let mut t = tool_at_origin();
        for side in WristSide::BOTH {
            for _ in 0..3 {
                let mut b = block(0.06, 0.0, 0.0, 0.05, 0.03);
                b.wrist = side;
                t.append_block(b).unwrap();
            }
        }
        let handles = t.handle_region().unwrap();
        assert_eq!(handles.len(), 4);
        let left = t.world_shapes(WristSide::Left);
        let right = t.world_shapes(WristSide::Right);
        assert_eq!(handles[0], left[0]);
        assert_eq!(handles[1], left[1]);
        assert_eq!(handles[2], right[0]);
        assert_eq!(handles[3], right[1]);
        // Handle region is a prefix-subset of the full shape list, order kept.
        let all = t.all_world_shapes();
        for h in &handles {
            assert!(all.contains(h));
        }
    }

    #[test]
    fn detach_reattach_round_trips() {
        let mut rng = DetRng::keyed(&[303, 1]);
        for _ in 0..1000 {
            let mut t = ToolAssembly::new(
                Pose2::new(V::new(rng.range(-0.1, 0.6), rng.range(-0.3, 0.3)), rng.range(-3.0, 3.0)),
                workspace(),
            );
            let n = 1 + rng.index(6);
            for _ in 0..n {
                t.append_block(block(
                    rng.range(-0.1, 0.1),
                    rng.range(-0.1, 0.1),
                    rng.range(-3.0, 3.0),
                    rng.range(0.01, 0.12),
                    rng.range(0.01, 0.12),
                ))
                .unwrap();
            }
            let placement = Pose2::new(V::new(rng.range(-0.5, 0.5), rng.range(-0.5, 0.5)), rng.range(-3.0, 3.0));
            let obj = t.detach(WristSide::Right, placement).unwrap();
            assert_eq!(obj.shapes.len(), n);

            // Re-attach: put the object so its grasp pose coincides with the
            // original anchor; shapes must reproduce the built world shapes.
            let anchor = t.anchor_pose(WristSide::Right);
            let reattached_pose = compose(anchor, obj.grasp_pose.inverse());
            let restored: Vec<Obb<f64>> = obj.shapes.iter().map(|s| s.transformed(reattached_pose)).collect();
            let original = t.world_shapes(WristSide::Right);
            for (r, o) in restored.iter().zip(&original) {
                assert!((r.center - o.center).norm() < 1e-9);
                assert!(wrap_angle(r.angle - o.angle).abs() < 1e-9);
                assert_eq!(r.half_extents, o.half_extents);
            }
        }
    }

    #[test]
    fn detach_empty_side_is_an_error() {
        let t = tool_at_origin();
        assert!(matches!(t.detach(WristSide::Right, Pose2::identity()), Err(ToolError::EmptyTool)));
    }

    #[test]
    fn single_block_detach_grasp_pose_inverts_block_zero() {
        let mut t = tool_at_origin();
        t.append_block(block(0.05, 0.02, 0.3, 0.06, 0.03)).unwrap();
        let obj = t.detach(WristSide::Right, Pose2::identity()).unwrap();
        assert_eq!(obj.shapes.len(), 1);
        // Object frame is block 0's frame: the shape sits at the origin.
        assert!(obj.shapes[0].center.norm() < 1e-12);
        // grasp pose is the anchor seen from block 0: inverse of the rel pose.
        let expected = Pose2::new(V::new(0.05, 0.02), 0.3).inverse();
        assert!((obj.grasp_pose.position - expected.position).norm() < 1e-12);
        assert!((obj.grasp_pose.angle - expected.angle).abs() < 1e-12);
    }

    #[test]
    fn blocks_stay_inside_workspace_bounds() {
        let mut rng = DetRng::keyed(&[303, 2]);
        let bounds = workspace();
        for _ in 0..200 {
            let mut t = ToolAssembly::new(
                Pose2::new(V::new(rng.range(-0.2, 1.2), rng.range(-0.7, 0.7)), rng.range(-3.0, 3.0)),
                bounds,
            );
            for _ in 0..BUILD_CAP {
                let _ = t.append_block(BlockSpec {
                    rel_offset: V::new(rng.range(-0.2, 0.2), rng.range(-0.2, 0.2)),
                    rel_angle: rng.range(-3.2, 3.2),
                    size: V::new(rng.range(0.0, 0.2), rng.range(0.0, 0.2)),
                    wrist: if rng.chance(0.5) { WristSide::Left } else { WristSide::Right },
                });
            }
            for s in t.all_world_shapes() {
                let (lo, hi) = s.aabb();
                assert!(lo.x >= bounds.min.x - 1e-9 && hi.x <= bounds.max.x + 1e-9);
                assert!(lo.y >= bounds.min.y - 1e-9 && hi.y <= bounds.max.y + 1e-9);
                // And the offset clamp survived the bounds clamp.
            }
            for b in t.blocks() {
                assert!(b.rel_offset.norm() <= OFFSET_MAX + 1e-9);
            }
        }
    }

    #[test]
    fn json_round_trip_is_exact() {
        let mut rng = DetRng::keyed(&[303, 3]);
        for _ in 0..200 {
            let mut t = tool_at_origin().with_handle_count(1 + rng.index(3));
            for _ in 0..1 + rng.index(8) {
                let _ = t.append_block(BlockSpec {
                    rel_offset: V::new(rng.range(-0.12, 0.12), rng.range(-0.12, 0.12)),
                    rel_angle: rng.range(-3.1, 3.1),
                    size: V::new(rng.range(0.01, 0.1), rng.range(0.01, 0.1)),
                    wrist: if rng.chance(0.5) { WristSide::Left } else { WristSide::Right },
                });
            }
            let json = t.to_json();
            let loaded = ToolAssembly::from_json(&json, t.wrist_pose, t.bounds).unwrap();
            assert_eq!(loaded.to_json(), json, "decimal round trip must be exact");
            assert_eq!(loaded.blocks(), t.blocks());
        }
    }
}
