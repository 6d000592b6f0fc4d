//! Weight files: JSON manifest (layer specs, tensor names and shapes) plus a
//! little-endian raw f32 payload. Round trips are bit-exact.

use crate::model::{ModelSpec, ModelWeights};
use crate::tensor::Tensor;
use serde::{Deserialize, Serialize};
use toolforge_core::io::{
    bytes_to_f32s, f32s_to_bytes, read_envelope, write_envelope, EnvelopeError,
};

pub const WEIGHTS_MAGIC: &[u8; 8] = b"TFWGHT01";
pub const WEIGHTS_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct TensorManifest {
    name: String,
    shape: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct WeightsHeader {
    spec: ModelSpec,
    tensors: Vec<TensorManifest>,
}

pub fn weights_to_bytes(spec: &ModelSpec, weights: &ModelWeights<f32>) -> Vec<u8> {
    let header = WeightsHeader {
        spec: spec.clone(),
        tensors: weights
            .tensors
            .iter()
            .map(|(name, t)| TensorManifest { name: name.clone(), shape: t.shape.clone() })
            .collect(),
    };
    let mut payload = Vec::new();
    for (_, t) in &weights.tensors {
        payload.extend_from_slice(&f32s_to_bytes(&t.data));
    }
    write_envelope(WEIGHTS_MAGIC, WEIGHTS_VERSION, &header, &payload)
        .expect("weights header serializes")
}

pub fn weights_from_bytes(bytes: &[u8]) -> Result<(ModelSpec, ModelWeights<f32>), EnvelopeError> {
    let (header, payload): (WeightsHeader, _) =
        read_envelope(bytes, WEIGHTS_MAGIC, WEIGHTS_VERSION)?;
    let values = bytes_to_f32s(&payload)?;
    let expected: usize = header.tensors.iter().map(|t| t.shape.iter().product::<usize>()).sum();
    if values.len() != expected {
        return Err(EnvelopeError::CorruptPayload(format!(
            "manifest expects {expected} f32 values, payload holds {}",
            values.len()
        )));
    }
    let mut tensors = Vec::with_capacity(header.tensors.len());
    let mut offset = 0;
    for m in header.tensors {
        let n: usize = m.shape.iter().product();
        let data = values[offset..offset + n].to_vec();
        offset += n;
        tensors.push((m.name, Tensor::from_vec(&m.shape, data)));
    }
    Ok((header.spec, ModelWeights { tensors }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::LayerSpec;

    #[test]
    fn weight_round_trip_is_bit_exact() {
        let spec = ModelSpec::new(
            vec![1, 8, 8],
            vec![
                LayerSpec::Conv3x3 { cin: 1, cout: 2, stride: 2 },
                LayerSpec::ReLU,
                LayerSpec::Flatten,
                LayerSpec::Dense { input: 32, output: 5 },
            ],
        );
        let weights = ModelWeights::<f32>::init(&spec, 31);
        let bytes = weights_to_bytes(&spec, &weights);
        let (spec2, weights2) = weights_from_bytes(&bytes).unwrap();
        assert_eq!(spec2, spec);
        assert_eq!(weights2, weights);
        assert_eq!(weights_to_bytes(&spec2, &weights2), bytes);
    }

    #[test]
    fn truncated_weight_file_is_refused() {
        let spec = ModelSpec::new(vec![4], vec![LayerSpec::Dense { input: 4, output: 2 }]);
        let weights = ModelWeights::<f32>::init(&spec, 0);
        let bytes = weights_to_bytes(&spec, &weights);
        assert!(weights_from_bytes(&bytes[..bytes.len() - 5]).is_err());
    }
}
