//! Evaluation of ego-pose estimates by tracking keypoints through image
//! space, with the geometry, depth recovery and metrics it needs.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod geometry;
pub mod depth;
pub mod ingestion;
pub mod tracking;
pub mod metrics;
pub mod pipeline;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    struct Introduction;
    #[doc = include_str!("../../../book/src/frames-and-poses.md")]
    struct FramesAndPoses;
    #[doc = include_str!("../../../book/src/camera.md")]
    struct Camera;
    #[doc = include_str!("../../../book/src/depth.md")]
    struct Depth;
    #[doc = include_str!("../../../book/src/tracking.md")]
    struct Tracking;
    #[doc = include_str!("../../../book/src/metrics.md")]
    struct Metrics;
    #[doc = include_str!("../../../book/src/annotation-server.md")]
    struct AnnotationServer;
    #[doc = include_str!("../../../book/src/cli.md")]
    struct Cli;
}
