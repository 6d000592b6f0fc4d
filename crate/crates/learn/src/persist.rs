//! Model files: envelope-wrapped weight payloads for policies, the selector,
//! the detectors, and builder artifacts. Round trips are byte-identical.

use crate::arch::Role;
use crate::builder::BuilderArtifact;
use crate::convnet::ConvHeadModel;
use crate::detector::{DetectorKind, DetectorModel};
use crate::policy::{HeadLayout, PolicyNet};
use crate::selector::SelectorModel;
use serde::{Deserialize, Serialize};
use toolforge_core::io::{read_envelope, write_envelope, EnvelopeError};
use toolforge_neuro::{weights_from_bytes, weights_to_bytes};

pub const POLICY_MAGIC: &[u8; 8] = b"TFPOL001";
pub const SELECTOR_MAGIC: &[u8; 8] = b"TFSEL001";
pub const DETECTOR_MAGIC: &[u8; 8] = b"TFDET001";
pub const BUILDER_MAGIC: &[u8; 8] = b"TFBLD001";
pub const FRAMES_MAGIC: &[u8; 8] = b"TFFRM001";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct PolicyHeader {
    heads: HeadLayout,
    logit_offsets: Vec<f64>,
}

pub fn policy_to_bytes(policy: &PolicyNet) -> Vec<u8> {
    let header = PolicyHeader { heads: policy.heads, logit_offsets: policy.logit_offsets.clone() };
    let payload = weights_to_bytes(&policy.spec, &policy.weights);
    write_envelope(POLICY_MAGIC, FORMAT_VERSION, &header, &payload).expect("header serializes")
}

pub fn policy_from_bytes(bytes: &[u8]) -> Result<PolicyNet, EnvelopeError> {
    let (header, payload): (PolicyHeader, _) = read_envelope(bytes, POLICY_MAGIC, FORMAT_VERSION)?;
    let (spec, weights) = weights_from_bytes(&payload)?;
    Ok(PolicyNet { spec, weights, heads: header.heads, logit_offsets: header.logit_offsets })
}

#[derive(Serialize, Deserialize)]
struct TwoStageHeader {
    conv_len: u64,
    extra_dim: usize,
    detector_kind: Option<DetectorKind>,
}

fn two_stage_to_bytes(
    magic: &[u8; 8],
    net: &ConvHeadModel,
    detector_kind: Option<DetectorKind>,
) -> Vec<u8> {
    let conv = weights_to_bytes(&net.conv_spec, &net.conv_w);
    let head = weights_to_bytes(&net.head_spec, &net.head_w);
    let header = TwoStageHeader {
        conv_len: conv.len() as u64,
        extra_dim: net.extra_dim,
        detector_kind,
    };
    let mut payload = conv;
    payload.extend_from_slice(&head);
    write_envelope(magic, FORMAT_VERSION, &header, &payload).expect("header serializes")
}

fn two_stage_from_bytes(
    magic: &[u8; 8],
    bytes: &[u8],
) -> Result<(ConvHeadModel, Option<DetectorKind>), EnvelopeError> {
    let (header, payload): (TwoStageHeader, _) = read_envelope(bytes, magic, FORMAT_VERSION)?;
    let conv_len = header.conv_len as usize;
    if payload.len() < conv_len {
        return Err(EnvelopeError::CorruptPayload("conv stage truncated".into()));
    }
    let (conv_spec, conv_w) = weights_from_bytes(&payload[..conv_len])?;
    let (head_spec, head_w) = weights_from_bytes(&payload[conv_len..])?;
    Ok((
        ConvHeadModel { conv_spec, conv_w, head_spec, head_w, extra_dim: header.extra_dim },
        header.detector_kind,
    ))
}

pub fn selector_to_bytes(model: &SelectorModel) -> Vec<u8> {
    two_stage_to_bytes(SELECTOR_MAGIC, &model.net, None)
}

pub fn selector_from_bytes(bytes: &[u8]) -> Result<SelectorModel, EnvelopeError> {
    let (net, _) = two_stage_from_bytes(SELECTOR_MAGIC, bytes)?;
    Ok(SelectorModel { net })
}

pub fn detector_to_bytes(model: &DetectorModel) -> Vec<u8> {
    two_stage_to_bytes(DETECTOR_MAGIC, &model.net, Some(model.kind))
}

pub fn detector_from_bytes(bytes: &[u8]) -> Result<DetectorModel, EnvelopeError> {
    let (net, kind) = two_stage_from_bytes(DETECTOR_MAGIC, bytes)?;
    let kind = kind.ok_or_else(|| {
        EnvelopeError::CorruptPayload("detector file missing its kind tag".into())
    })?;
    Ok(DetectorModel { net, kind })
}

#[derive(Serialize, Deserialize)]
enum BuilderHeader {
    Genome { mean: Vec<f64>, noise_ladder: Vec<f64> },
    Policy { heads: HeadLayout, logit_offsets: Vec<f64> },
}

pub fn builder_to_bytes(artifact: &BuilderArtifact) -> Vec<u8> {
    match artifact {
        BuilderArtifact::Genome { mean, noise_ladder } => {
            let header =
                BuilderHeader::Genome { mean: mean.clone(), noise_ladder: noise_ladder.clone() };
            write_envelope(BUILDER_MAGIC, FORMAT_VERSION, &header, &[]).expect("header serializes")
        }
        BuilderArtifact::Policy(policy) => {
            let header = BuilderHeader::Policy {
                heads: policy.heads,
                logit_offsets: policy.logit_offsets.clone(),
            };
            let payload = weights_to_bytes(&policy.spec, &policy.weights);
            write_envelope(BUILDER_MAGIC, FORMAT_VERSION, &header, &payload)
                .expect("header serializes")
        }
    }
}

pub fn builder_from_bytes(bytes: &[u8]) -> Result<BuilderArtifact, EnvelopeError> {
    let (header, payload): (BuilderHeader, _) =
        read_envelope(bytes, BUILDER_MAGIC, FORMAT_VERSION)?;
    Ok(match header {
        BuilderHeader::Genome { mean, noise_ladder } => {
            BuilderArtifact::Genome { mean, noise_ladder }
        }
        BuilderHeader::Policy { heads, logit_offsets } => {
            let (spec, weights) = weights_from_bytes(&payload)?;
            BuilderArtifact::Policy(PolicyNet { spec, weights, heads, logit_offsets })
        }
    })
}

#[derive(Serialize, Deserialize)]
struct FramesHeader {
    count: usize,
    side: usize,
    labels: Vec<bool>,
}

/// Detector frame files: labeled 32x32 renders, one contiguous f32 payload.
pub fn frames_to_bytes(frames: &[(toolforge_core::raster::DepthRaster, bool)]) -> Vec<u8> {
    let side = frames.first().map(|(r, _)| r.width).unwrap_or(32);
    let header = FramesHeader {
        count: frames.len(),
        side,
        labels: frames.iter().map(|(_, l)| *l).collect(),
    };
    let mut values = Vec::with_capacity(frames.len() * side * side);
    for (r, _) in frames {
        values.extend_from_slice(&r.values);
    }
    write_envelope(FRAMES_MAGIC, FORMAT_VERSION, &header, &toolforge_core::io::f32s_to_bytes(&values))
        .expect("header serializes")
}

pub fn frames_from_bytes(
    bytes: &[u8],
) -> Result<Vec<(toolforge_core::raster::DepthRaster, bool)>, EnvelopeError> {
    let (header, payload): (FramesHeader, _) = read_envelope(bytes, FRAMES_MAGIC, FORMAT_VERSION)?;
    let values = toolforge_core::io::bytes_to_f32s(&payload)?;
    let px = header.side * header.side;
    if values.len() != header.count * px || header.labels.len() != header.count {
        return Err(EnvelopeError::CorruptPayload("frame count mismatch".into()));
    }
    Ok((0..header.count)
        .map(|i| {
            (
                toolforge_core::raster::DepthRaster {
                    width: header.side,
                    height: header.side,
                    values: values[i * px..(i + 1) * px].to_vec(),
                },
                header.labels[i],
            )
        })
        .collect())
}

/// Role moniker for reports and CLI output.
pub fn role_name(role: Role) -> &'static str {
    match role {
        Role::Sweeper => "sweeper",
        Role::Container => "container",
        Role::Hook => "hook",
        Role::Decanter => "decanter",
    }
}
