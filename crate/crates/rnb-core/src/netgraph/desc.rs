//! Network description: blocks of layers plus reuse annotations.
//!
//! JSON schema:
//! ```json
//! {
//!   "name": "mlp",
//!   "blocks": [ { "layers": [ {"kind":"dense","in":8,"out":8}, {"kind":"relu"} ] } ],
//!   "reuse": [
//!     { "granularity": "layer-wise", "spec": "1x2",
//!       "transforms": [ {"kind":"identity"}, {"kind":"channel_shuffle","g":2} ] }
//!   ]
//! }
//! ```
//! A reuse entry either gives `spec` ("basics x times", applied to the
//! uncovered weighted layers or blocks in order) or explicit `members`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::obu::ObuTransform;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Layer {
    Dense {
        #[serde(rename = "in")]
        in_dim: usize,
        #[serde(rename = "out")]
        out_dim: usize,
    },
    Conv2d {
        cin: usize,
        cout: usize,
        k: usize,
        #[serde(default = "default_stride")]
        stride: usize,
        #[serde(default)]
        pad: usize,
    },
    Relu,
    Norm {
        scale: f64,
        offset: f64,
    },
}

fn default_stride() -> usize {
    1
}

impl Layer {
    pub fn is_weighted(&self) -> bool {
        matches!(self, Layer::Dense { .. } | Layer::Conv2d { .. })
    }

    /// Logical matrix dims (rows, cols) of the weight this layer programs.
    /// Conv weights are the im2col-lowered matrix.
    pub fn weight_dims(&self) -> Option<(usize, usize)> {
        match *self {
            Layer::Dense { in_dim, out_dim } => Some((out_dim, in_dim)),
            Layer::Conv2d { cin, cout, k, .. } => Some((cout, cin * k * k)),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Block {
    pub layers: Vec<Layer>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Granularity {
    LayerWise,
    BlockWise,
}

/// Position of a weighted layer: block index, layer index within the block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LayerPos {
    pub block: usize,
    pub layer: usize,
}

impl LayerPos {
    /// Weight-store key for the matrix at this position.
    pub fn key(&self) -> String {
        format!("b{}.l{}", self.block, self.layer)
    }
}

impl std::fmt::Display for LayerPos {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "blocks[{}].layers[{}]", self.block, self.layer)
    }
}

/// One use position: a whole block or a single layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MemberRef {
    Layer { block: usize, layer: usize },
    Block { block: usize },
}

/// Reuse annotation as written in the description file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReuseSpec {
    pub granularity: Granularity,
    /// Shorthand "basics x times", e.g. "2x3". Exclusive with `members`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spec: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub basic: Option<MemberRef>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub members: Option<Vec<MemberRef>>,
    /// One transform per use; defaults to identity everywhere.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transforms: Option<Vec<ObuTransform>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkDesc {
    pub name: String,
    pub blocks: Vec<Block>,
    #[serde(default)]
    pub reuse: Vec<ReuseSpec>,
}

impl NetworkDesc {
    /// Weighted layer positions in topological order.
    pub fn weighted_positions(&self) -> Vec<LayerPos> {
        let mut out = Vec::new();
        for (b, block) in self.blocks.iter().enumerate() {
            for (l, layer) in block.layers.iter().enumerate() {
                if layer.is_weighted() {
                    out.push(LayerPos { block: b, layer: l });
                }
            }
        }
        out
    }

    pub fn layer(&self, pos: LayerPos) -> Option<&Layer> {
        self.blocks
            .get(pos.block)
            .and_then(|b| b.layers.get(pos.layer))
    }

    /// Static shape check along the layer chain. Channel counts are tracked
    /// exactly; spatial dims of convolutions are checked at run time.
    pub fn validate_shapes(&self) -> Result<()> {
        if self.blocks.is_empty() {
            return Err(Error::Schema {
                path: "blocks".into(),
                message: "at least one block required".into(),
            });
        }
        #[derive(Clone, Copy, PartialEq)]
        enum Feat {
            Start,
            Vector(usize),
            /// Channel count known, spatial dims resolved at run time.
            Map(usize),
        }
        let mut feat = Feat::Start;
        for (b, block) in self.blocks.iter().enumerate() {
            if block.layers.is_empty() {
                return Err(Error::Schema {
                    path: format!("blocks[{b}].layers"),
                    message: "block has no layers".into(),
                });
            }
            for (l, layer) in block.layers.iter().enumerate() {
                let path = format!("blocks[{b}].layers[{l}]");
                feat = match (*layer).clone() {
                    Layer::Dense { in_dim, out_dim } => {
                        if in_dim == 0 || out_dim == 0 {
                            return Err(Error::Schema {
                                path,
                                message: "zero dense dimension".into(),
                            });
                        }
                        match feat {
                            Feat::Vector(n) if n != in_dim => return Err(Error::Schema {
                                path,
                                message: format!(
                                    "dense expects {in_dim} inputs, previous layer produces {n}"
                                ),
                            }),
                            // Map input flattens; element count checked at run time.
                            _ => {}
                        }
                        Feat::Vector(out_dim)
                    }
                    Layer::Conv2d {
                        cin,
                        cout,
                        k,
                        stride,
                        ..
                    } => {
                        if cin == 0 || cout == 0 || k == 0 || stride == 0 {
                            return Err(Error::Schema {
                                path,
                                message: "zero conv dimension".into(),
                            });
                        }
                        match feat {
                            Feat::Map(c) if c != cin => {
                                return Err(Error::Schema {
                                    path,
                                    message: format!(
                                        "conv expects {cin} channels, previous layer produces {c}"
                                    ),
                                })
                            }
                            Feat::Vector(_) => {
                                return Err(Error::Schema {
                                    path,
                                    message: "conv after a dense layer is not supported".into(),
                                })
                            }
                            _ => {}
                        }
                        Feat::Map(cout)
                    }
                    Layer::Relu | Layer::Norm { .. } => feat,
                };
            }
        }
        Ok(())
    }
}

/// Parses and validates a network description file.
pub fn parse_netdesc(text: &str) -> Result<NetworkDesc> {
    let net: NetworkDesc = serde_json::from_str(text).map_err(|e| Error::Schema {
        path: format!("line {} column {}", e.line(), e.column()),
        message: e.to_string(),
    })?;
    net.validate_shapes()?;
    // Resolving the schedule surfaces reuse errors (bad members, incompatible
    // shapes, unknown transforms) with their paths.
    crate::prm::build_schedule(&net)?;
    Ok(net)
}

/// Parses a "KxT" shorthand: K basic matrices, each reused T times.
pub fn parse_reuse_shorthand(s: &str) -> Result<(usize, usize)> {
    let cleaned = s.trim().to_ascii_lowercase();
    let parts: Vec<&str> = cleaned.split('x').collect();
    if parts.len() == 2 {
        if let (Ok(k), Ok(t)) = (parts[0].trim().parse(), parts[1].trim().parse()) {
            if k >= 1 && t >= 1 {
                return Ok((k, t));
            }
        }
    }
    Err(Error::Schema {
        path: "reuse.spec".into(),
        message: format!("expected \"KxT\" with positive integers, got {s:?}"),
    })
}
