//! Built-in benchmark programs.
//!
//! The ODE programs integrate `y' = p(t)` over ten steps; the polynomial
//! coefficients are part of the input vector along with `y0`, `t0` and the
//! step size. Input domains are chosen so that no int16
//! node can overflow under exact arithmetic (checked by interval analysis in
//! the tests), which keeps every program inside the range where residue
//! arithmetic is faithful.

use super::{DFGraph, GraphBuilder, IrError, NodeId, Scalar, ScalarType};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// A named built-in program with its parameters.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum BuiltinSpec {
    Euler {
        order: u8,
        #[serde(default = "default_steps")]
        steps: u32,
    },
    RungeKutta {
        order: u8,
        #[serde(default = "default_steps")]
        steps: u32,
    },
    FirFilter {
        #[serde(default = "default_taps")]
        taps: u32,
        #[serde(default)]
        seed: u64,
    },
    Conv2x2,
    ConvLayer {
        #[serde(default = "default_channels")]
        channels: u32,
        #[serde(default = "default_kernel")]
        kernel: u32,
        #[serde(default = "default_size")]
        size: u32,
        #[serde(default = "default_out_channels")]
        out_channels: u32,
        #[serde(default)]
        seed: u64,
    },
}

fn default_steps() -> u32 {
    10
}
fn default_taps() -> u32 {
    11
}
fn default_channels() -> u32 {
    8
}
fn default_kernel() -> u32 {
    3
}
fn default_size() -> u32 {
    16
}
fn default_out_channels() -> u32 {
    1
}

/// Sampling range of one program input.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum InputDomain {
    Int { lo: i16, hi: i16 },
    Float { lo: f64, hi: f64 },
}

impl InputDomain {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Scalar {
        match *self {
            InputDomain::Int { lo, hi } => Scalar::Int(rng.gen_range(lo..=hi)),
            InputDomain::Float { lo, hi } => Scalar::Float(rng.gen_range(lo..hi)),
        }
    }
}

const INT_LABELS: [&str; 4] = ["euler", "runge_kutta", "fir_filter", "conv2x2"];

impl BuiltinSpec {
    pub fn euler(order: u8) -> Self {
        BuiltinSpec::Euler {
            order,
            steps: default_steps(),
        }
    }

    pub fn runge_kutta(order: u8) -> Self {
        BuiltinSpec::RungeKutta {
            order,
            steps: default_steps(),
        }
    }

    pub fn fir_filter() -> Self {
        BuiltinSpec::FirFilter {
            taps: default_taps(),
            seed: 0,
        }
    }

    pub fn conv_layer() -> Self {
        BuiltinSpec::ConvLayer {
            channels: default_channels(),
            kernel: default_kernel(),
            size: default_size(),
            out_channels: default_out_channels(),
            seed: 0,
        }
    }

    /// The six integer benchmark programs at their default parameters.
    pub fn integer_suite() -> Vec<BuiltinSpec> {
        vec![
            Self::euler(2),
            Self::euler(3),
            Self::runge_kutta(2),
            Self::runge_kutta(3),
            Self::fir_filter(),
            BuiltinSpec::Conv2x2,
        ]
    }

    /// Short report label, e.g. `euler2` or `fir11`.
    pub fn label(&self) -> String {
        match self {
            BuiltinSpec::Euler { order, .. } => format!("euler{order}"),
            BuiltinSpec::RungeKutta { order, .. } => format!("rk{order}"),
            BuiltinSpec::FirFilter { taps, .. } => format!("fir{taps}"),
            BuiltinSpec::Conv2x2 => "conv2x2".into(),
            BuiltinSpec::ConvLayer { .. } => "conv_layer".into(),
        }
    }

    pub fn is_integer(&self) -> bool {
        !matches!(self, BuiltinSpec::ConvLayer { .. })
    }

    pub fn validate(&self) -> Result<(), IrError> {
        let bad = |m: String| Err(IrError::Builtin(m));
        match *self {
            BuiltinSpec::Euler { order, steps, .. } | BuiltinSpec::RungeKutta { order, steps, .. } => {
                if !(2..=3).contains(&order) {
                    return bad(format!("order must be 2 or 3, got {order}"));
                }
                if !(1..=10).contains(&steps) {
                    return bad(format!("steps must be in 1..=10, got {steps}"));
                }
                Ok(())
            }
            BuiltinSpec::FirFilter { taps, .. } if !(1..=64).contains(&taps) => {
                bad(format!("taps must be in 1..=64, got {taps}"))
            }
            BuiltinSpec::ConvLayer {
                channels,
                kernel,
                size,
                out_channels,
                ..
            } => {
                if channels == 0 || kernel == 0 || out_channels == 0 || kernel > size || size > 256 {
                    return bad(format!(
                        "need 0 < kernel <= size <= 256 and nonzero channels (channels={channels}, kernel={kernel}, size={size}, out_channels={out_channels})"
                    ));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// Per-input sampling domain, in program input order.
    pub fn input_domain(&self) -> Vec<InputDomain> {
        let int = |(lo, hi): (i64, i64)| InputDomain::Int {
            lo: lo as i16,
            hi: hi as i16,
        };
        match *self {
            BuiltinSpec::Euler { order, .. } => ode_domain(Method::Euler, order).into_iter().map(int).collect(),
            BuiltinSpec::RungeKutta { order, .. } => ode_domain(Method::RungeKutta, order).into_iter().map(int).collect(),
            BuiltinSpec::FirFilter { taps, .. } => vec![int((0, fir_sample_max(taps))); taps as usize],
            BuiltinSpec::Conv2x2 => vec![int((0, CONV2X2_MAX)); 8],
            BuiltinSpec::ConvLayer { channels, size, .. } => {
                vec![InputDomain::Float { lo: 0.0, hi: 1.0 }; (channels * size * size) as usize]
            }
        }
    }

    pub fn sample_inputs<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<Scalar> {
        self.input_domain().iter().map(|d| d.sample(rng)).collect()
    }

    pub fn build(&self) -> Result<DFGraph, IrError> {
        self.validate()?;
        match *self {
            BuiltinSpec::Euler { order, steps } => build_ode(Method::Euler, order, steps),
            BuiltinSpec::RungeKutta { order, steps } => build_ode(Method::RungeKutta, order, steps),
            BuiltinSpec::FirFilter { taps, seed } => Ok(build_fir(&fir_coefficients(taps, seed))),
            BuiltinSpec::Conv2x2 => Ok(build_conv2x2()),
            BuiltinSpec::ConvLayer {
                channels,
                kernel,
                size,
                out_channels,
                seed,
            } => Ok(build_conv_layer(
                channels as usize,
                kernel as usize,
                size as usize,
                &conv_weights(channels, kernel, out_channels, seed),
            )),
        }
    }
}

impl fmt::Display for BuiltinSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// Parses `name` or `name:key=value,...`, e.g. `euler:order=3` or `fir`.
impl FromStr for BuiltinSpec {
    type Err = IrError;

    fn from_str(s: &str) -> Result<Self, IrError> {
        let (name, params) = s.split_once(':').unwrap_or((s, ""));
        let name = match name.trim() {
            "rk" | "runge_kutta" | "runge-kutta" => "runge_kutta",
            "fir" | "fir_filter" => "fir_filter",
            "conv" | "conv_layer" => "conv_layer",
            other => other,
        };
        if !INT_LABELS.contains(&name) && name != "conv_layer" {
            return Err(IrError::Builtin(format!("unknown builtin {name:?}")));
        }
        let mut map = serde_json::Map::new();
        map.insert("name".into(), name.into());
        for kv in params.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| IrError::Builtin(format!("expected key=value, got {kv:?}")))?;
            let v: u64 = v
                .trim()
                .parse()
                .map_err(|_| IrError::Builtin(format!("parameter {k} needs an integer, got {v:?}")))?;
            map.insert(k.trim().into(), v.into());
        }
        let spec: BuiltinSpec =
            serde_json::from_value(map.into()).map_err(|e| IrError::Builtin(format!("{s}: {e}")))?;
        spec.validate()?;
        Ok(spec)
    }
}

pub fn builtin_program(spec: &BuiltinSpec) -> Result<DFGraph, IrError> {
    spec.build()
}

fn coeff_rng(seed: u64, what: &str) -> rand_chacha::ChaCha8Rng {
    crate::rng::substream(seed, &format!("builtin/{what}"), 0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Method {
    Euler,
    RungeKutta,
}

/// Value ranges for one ODE program. `coeffs[i]` bounds the coefficient of
/// `t^i`, except that the constant term is sampled from ten times its range.
pub(crate) struct OdeShape {
    pub coeffs: [(i64, i64); 4],
    pub y0: (i64, i64),
    pub t0: (i64, i64),
    pub step: (i64, i64),
}

pub(crate) fn ode_shape(method: Method, order: u8) -> OdeShape {
    match (method, order) {
        (Method::Euler, 2) => OdeShape {
            coeffs: [(1, 9), (1, 9), (1, 3), (0, 0)],
            y0: (2000, 6000),
            t0: (0, 4),
            step: (1, 2),
        },
        (Method::Euler, _) => OdeShape {
            coeffs: [(1, 9), (1, 9), (1, 3), (1, 1)],
            y0: (4000, 8000),
            t0: (-10, -6),
            step: (1, 2),
        },
        (Method::RungeKutta, 2) => OdeShape {
            coeffs: [(1, 9), (1, 9), (1, 1), (0, 0)],
            y0: (4000, 8000),
            t0: (-20, -14),
            step: (1, 2),
        },
        (Method::RungeKutta, _) => OdeShape {
            coeffs: [(1, 9), (1, 9), (1, 3), (1, 1)],
            y0: (4000, 8000),
            t0: (-12, -8),
            step: (1, 1),
        },
    }
}

/// Input ranges in program order: `y0`, `t0`, step, then `c0..=c_order`.
pub(crate) fn ode_domain(method: Method, order: u8) -> Vec<(i64, i64)> {
    let s = ode_shape(method, order);
    let mut d = vec![s.y0, s.t0, s.step, (10 * s.coeffs[0].0, 10 * s.coeffs[0].1)];
    d.extend(&s.coeffs[1..=order as usize]);
    d
}

pub(crate) fn build_ode(method: Method, order: u8, steps: u32) -> Result<DFGraph, IrError> {
    use ScalarType::Int16;
    let name = match method {
        Method::Euler => format!("euler{order}"),
        Method::RungeKutta => format!("rk{order}"),
    };
    let mut b = GraphBuilder::new(name, Int16);
    let y0 = b.input(Int16);
    let t0 = b.input(Int16);
    let step = b.input(Int16);
    let c: Vec<NodeId> = (0..=order).map(|_| b.input(Int16)).collect();

    let mut y = y0;
    let mut t = t0;
    let last = steps - 1;
    let h = match method {
        Method::Euler => {
            // Fold the step into the coefficients once: a_i = h * c_i.
            let a: Vec<NodeId> = (1..=order as usize).rev().map(|i| b.mul(step, c[i])).collect();
            for n in 0..steps {
                let inc = if order == 2 {
                    let u = b.mul(a[0], t);
                    let v = b.add(u, a[1]);
                    b.mul(v, t)
                } else {
                    let s = b.mul(t, t);
                    let u = b.mul(a[0], t);
                    let v = b.add(u, a[1]);
                    let w = b.mul(v, s);
                    let x = b.mul(a[2], t);
                    b.add(w, x)
                };
                y = b.add(y, inc);
                if n < last {
                    t = b.add(t, step);
                }
            }
            step
        }
        Method::RungeKutta => {
            let hh = step;
            let h = b.add(hh, hh);
            for n in 0..steps {
                if order == 2 {
                    // Midpoint rule.
                    let m = b.add(t, hh);
                    let u = b.mul(c[2], m);
                    let v = b.add(u, c[1]);
                    let w = b.mul(v, m);
                    let z = b.mul(h, w);
                    y = b.add(y, z);
                    if n < last {
                        t = b.add(t, h);
                    }
                } else {
                    // Trapezoidal (Heun) rule on q(t) = ((c3 t + c2) t + c1) t.
                    let te = b.add(t, h);
                    let q = |b: &mut GraphBuilder, t: NodeId| {
                        let u = b.mul(c[3], t);
                        let v = b.add(u, c[2]);
                        let w = b.mul(v, t);
                        let x = b.add(w, c[1]);
                        b.mul(x, t)
                    };
                    let k1 = q(&mut b, t);
                    let k2 = q(&mut b, te);
                    let s = b.add(k1, k2);
                    let z = b.mul(hh, s);
                    y = b.add(y, z);
                    t = te;
                }
            }
            h
        }
    };
    let f = b.mul(h, c[0]);
    y = b.add(y, f);
    b.output(y);
    b.build()
}

const FIR_COEFF_MAX: i64 = 15;
const CONV2X2_MAX: i64 = 90;

fn fir_sample_max(taps: u32) -> i64 {
    (i16::MAX as i64 / (taps as i64 * FIR_COEFF_MAX)).min(190)
}

fn fir_coefficients(taps: u32, seed: u64) -> Vec<i16> {
    let mut rng = coeff_rng(seed, "fir");
    (0..taps).map(|_| rng.gen_range(1..=FIR_COEFF_MAX as i16)).collect()
}

fn build_fir(h: &[i16]) -> DFGraph {
    use ScalarType::Int16;
    let mut b = GraphBuilder::new(format!("fir{}", h.len()), Int16);
    let xs: Vec<NodeId> = h.iter().map(|_| b.input(Int16)).collect();
    let hs: Vec<NodeId> = h.iter().map(|&v| b.constant(Scalar::Int(v))).collect();
    let mut acc = b.mul(hs[0], xs[0]);
    for i in 1..h.len() {
        let m = b.mul(hs[i], xs[i]);
        acc = b.add(acc, m);
    }
    b.output(acc);
    b.build().expect("fir graph is well formed")
}

/// Inputs are four pixels followed by four kernel weights.
fn build_conv2x2() -> DFGraph {
    use ScalarType::Int16;
    let mut b = GraphBuilder::new("conv2x2", Int16);
    let px: Vec<NodeId> = (0..4).map(|_| b.input(Int16)).collect();
    let kw: Vec<NodeId> = (0..4).map(|_| b.input(Int16)).collect();
    let mut acc = b.mul(px[0], kw[0]);
    for i in 1..4 {
        let m = b.mul(px[i], kw[i]);
        acc = b.add(acc, m);
    }
    b.output(acc);
    b.build().expect("conv2x2 graph is well formed")
}

/// Weights indexed `[out][channel][ky][kx]`, drawn from U(0, 0.2).
fn conv_weights(channels: u32, kernel: u32, out_channels: u32, seed: u64) -> Vec<f64> {
    let mut rng = coeff_rng(seed, "conv_layer");
    (0..out_channels * channels * kernel * kernel)
        .map(|_| rng.gen_range(0.0..0.2))
        .collect()
}

/// Valid (unpadded) convolution; inputs are `[channel][row][col]`, outputs
/// `[out][row][col]`. Each output is one left-to-right accumulation chain.
fn build_conv_layer(channels: usize, kernel: usize, size: usize, weights: &[f64]) -> DFGraph {
    use ScalarType::Float64;
    let per_out = channels * kernel * kernel;
    let out_channels = weights.len() / per_out;
    let mut b = GraphBuilder::new("conv_layer", Float64);
    let xs: Vec<NodeId> = (0..channels * size * size).map(|_| b.input(Float64)).collect();
    let ws: Vec<NodeId> = weights.iter().map(|&w| b.constant(Scalar::Float(w))).collect();
    let out = size - kernel + 1;
    for o in 0..out_channels {
        for r in 0..out {
            for col in 0..out {
                let mut acc: Option<NodeId> = None;
                for ch in 0..channels {
                    for ky in 0..kernel {
                        for kx in 0..kernel {
                            let x = xs[(ch * size + r + ky) * size + col + kx];
                            let w = ws[o * per_out + (ch * kernel + ky) * kernel + kx];
                            let m = b.mul(x, w);
                            acc = Some(match acc {
                                None => m,
                                Some(a) => b.add(a, m),
                            });
                        }
                    }
                }
                b.output(acc.expect("kernel is non-empty"));
            }
        }
    }
    b.build().expect("conv layer graph is well formed")
}
