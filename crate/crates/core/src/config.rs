//! Text forms for problems, reference measures and functions, as used on the command line.
//!
//! ```text
//! problem  = uniform(n) | gapped(n) | model(n,kappa,rho) | kneser(N,K)
//!          | sampcov(n,d,sigma) | spiked(n,nprime,d,z,sigma) | heisenberg(N,S[,Jx,Jy,Jz])
//! measure  = chebT(a,b) | chebU(a,b) | mix(term + term + ...)
//! term     = w*chebT(a,b) | w*chebU(a,b) | w*atom(z)
//! function = identity | inverse | log | abs | exp_neg(b) | x2_exp_neg(b) | runge
//!          | poly(c0,c1,...) | step(t)
//! ```

use std::str::FromStr;

use crate::error::{Error, Result};
use crate::estimator::FunctionSpec;
use crate::operators::LinearOperator;
use crate::orthopoly::{mixture_measure, Component, ReferenceMeasure};
use crate::problems;

/// `name(arg, arg, ...)` or a bare `name`.
struct Call<'a> {
    name: &'a str,
    args: Vec<&'a str>,
    bare: bool,
}

fn split_top(s: &str, sep: char) -> Vec<&str> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, c) in s.char_indices() {
        match c {
            '(' => depth += 1,
            ')' => depth -= 1,
            c if c == sep && depth == 0 => {
                out.push(s[start..i].trim());
                start = i + c.len_utf8();
            }
            _ => {}
        }
    }
    out.push(s[start..].trim());
    out
}

fn parse_call<'a>(what: &'static str, input: &'a str) -> Result<Call<'a>> {
    let s = input.trim();
    let err = |msg: &str| Error::Spec {
        what,
        input: input.to_string(),
        msg: msg.to_string(),
    };
    match s.find('(') {
        None => {
            if s.is_empty() {
                return Err(err("empty"));
            }
            Ok(Call {
                name: s,
                args: Vec::new(),
                bare: true,
            })
        }
        Some(open) => {
            if !s.ends_with(')') {
                return Err(err("missing closing parenthesis"));
            }
            let inner = &s[open + 1..s.len() - 1];
            let depth = inner.chars().try_fold(0i32, |d, c| {
                let d = d + (c == '(') as i32 - (c == ')') as i32;
                (d >= 0).then_some(d)
            });
            if depth != Some(0) {
                return Err(err("unbalanced parentheses"));
            }
            let args = if inner.trim().is_empty() {
                Vec::new()
            } else {
                split_top(inner, ',')
            };
            Ok(Call {
                name: s[..open].trim(),
                args,
                bare: false,
            })
        }
    }
}

/// Parses a real number, accepting `p/q` fractions.
fn number(what: &'static str, input: &str, arg: &str) -> Result<f64> {
    let err = || Error::Spec {
        what,
        input: input.to_string(),
        msg: format!("`{arg}` is not a number"),
    };
    let v = match arg.split_once('/') {
        Some((p, q)) => {
            let (p, q): (f64, f64) = (
                p.trim().parse().map_err(|_| err())?,
                q.trim().parse().map_err(|_| err())?,
            );
            p / q
        }
        None => arg.parse::<f64>().map_err(|_| err())?,
    };
    if !v.is_finite() {
        return Err(err());
    }
    Ok(v)
}

fn count(what: &'static str, input: &str, arg: &str) -> Result<usize> {
    arg.parse::<usize>().map_err(|_| Error::Spec {
        what,
        input: input.to_string(),
        msg: format!("`{arg}` is not a nonnegative integer"),
    })
}

fn arity(what: &'static str, input: &str, call: &Call, allowed: &[usize]) -> Result<()> {
    if call.bare && !allowed.contains(&0) || !allowed.contains(&call.args.len()) {
        let want: Vec<String> = allowed.iter().map(|n| n.to_string()).collect();
        return Err(Error::Spec {
            what,
            input: input.to_string(),
            msg: format!(
                "`{}` takes {} argument(s), got {}",
                call.name,
                want.join(" or "),
                call.args.len()
            ),
        });
    }
    Ok(())
}

/// A built-in test problem.
#[derive(Debug, Clone, PartialEq)]
pub enum ProblemSpec {
    Uniform(usize),
    Gapped(usize),
    Model {
        n: usize,
        kappa: f64,
        rho: f64,
    },
    Kneser {
        n: usize,
        k: usize,
    },
    SampleCovariance {
        n: usize,
        d: f64,
        sigma: f64,
    },
    Spiked {
        n: usize,
        n_prime: usize,
        d: f64,
        z: f64,
        sigma: f64,
    },
    Heisenberg {
        sites: usize,
        spin: f64,
        j: (f64, f64, f64),
    },
}

impl FromStr for ProblemSpec {
    type Err = Error;

    fn from_str(input: &str) -> Result<Self> {
        const W: &str = "problem";
        let call = parse_call(W, input)?;
        let a = &call.args;
        let num = |i: usize| number(W, input, a[i]);
        let int = |i: usize| count(W, input, a[i]);
        Ok(match call.name {
            "uniform" => {
                arity(W, input, &call, &[1])?;
                Self::Uniform(int(0)?)
            }
            "gapped" => {
                arity(W, input, &call, &[1])?;
                Self::Gapped(int(0)?)
            }
            "model" => {
                arity(W, input, &call, &[3])?;
                Self::Model {
                    n: int(0)?,
                    kappa: num(1)?,
                    rho: num(2)?,
                }
            }
            "kneser" => {
                arity(W, input, &call, &[2])?;
                Self::Kneser {
                    n: int(0)?,
                    k: int(1)?,
                }
            }
            "sampcov" => {
                arity(W, input, &call, &[3])?;
                Self::SampleCovariance {
                    n: int(0)?,
                    d: num(1)?,
                    sigma: num(2)?,
                }
            }
            "spiked" => {
                arity(W, input, &call, &[5])?;
                Self::Spiked {
                    n: int(0)?,
                    n_prime: int(1)?,
                    d: num(2)?,
                    z: num(3)?,
                    sigma: num(4)?,
                }
            }
            "heisenberg" => {
                arity(W, input, &call, &[2, 5])?;
                let j = if a.len() == 5 {
                    (num(2)?, num(3)?, num(4)?)
                } else {
                    (1.0, 1.0, 1.0)
                };
                Self::Heisenberg {
                    sites: int(0)?,
                    spin: num(1)?,
                    j,
                }
            }
            other => {
                return Err(Error::Spec {
                    what: W,
                    input: input.to_string(),
                    msg: format!("unknown problem `{other}`"),
                })
            }
        })
    }
}

impl ProblemSpec {
    /// Builds the operator; random problems draw from `seed`.
    pub fn build(&self, seed: u64) -> Result<Box<dyn LinearOperator>> {
        Ok(match *self {
            Self::Uniform(n) => Box::new(problems::uniform_spectrum(n)?),
            Self::Gapped(n) => Box::new(problems::gapped_spectrum(n)?),
            Self::Model { n, kappa, rho } => Box::new(problems::model_problem(n, kappa, rho)?),
            Self::Kneser { n, k } => Box::new(problems::kneser_adjacency(n, k)?),
            Self::SampleCovariance { n, d, sigma } => {
                Box::new(problems::sample_covariance(n, d, sigma, seed)?)
            }
            Self::Spiked {
                n,
                n_prime,
                d,
                z,
                sigma,
            } => Box::new(problems::spiked_covariance(n, n_prime, d, z, sigma, seed)?),
            Self::Heisenberg { sites, spin, j } => {
                Box::new(problems::heisenberg_ring(sites, spin, j.0, j.1, j.2)?)
            }
        })
    }
}

fn interval_args(what: &'static str, input: &str, call: &Call) -> Result<(f64, f64)> {
    arity(what, input, call, &[2])?;
    Ok((
        number(what, input, call.args[0])?,
        number(what, input, call.args[1])?,
    ))
}

fn component(input: &str, term: &str) -> Result<(f64, Component)> {
    const W: &str = "measure";
    let (w, body) = term.split_once('*').ok_or_else(|| Error::Spec {
        what: W,
        input: input.to_string(),
        msg: format!("mixture term `{term}` must look like weight*component"),
    })?;
    let weight = number(W, input, w.trim())?;
    let call = parse_call(W, body)?;
    let comp = match call.name {
        "chebT" => {
            let (a, b) = interval_args(W, input, &call)?;
            Component::ChebyshevT { a, b }
        }
        "chebU" => {
            let (a, b) = interval_args(W, input, &call)?;
            Component::ChebyshevU { a, b }
        }
        "atom" => {
            arity(W, input, &call, &[1])?;
            Component::Atom {
                z: number(W, input, call.args[0])?,
            }
        }
        other => {
            return Err(Error::Spec {
                what: W,
                input: input.to_string(),
                msg: format!("unknown component `{other}`"),
            })
        }
    };
    Ok((weight, comp))
}

/// Parses a reference measure.
pub fn parse_measure(input: &str) -> Result<ReferenceMeasure> {
    const W: &str = "measure";
    let call = parse_call(W, input)?;
    match call.name {
        "chebT" => {
            let (a, b) = interval_args(W, input, &call)?;
            ReferenceMeasure::chebyshev_t(a, b)
        }
        "chebU" => {
            let (a, b) = interval_args(W, input, &call)?;
            ReferenceMeasure::chebyshev_u(a, b)
        }
        "mix" => {
            arity(W, input, &call, &[1])?;
            let terms = split_top(call.args[0], '+');
            let comps = terms
                .iter()
                .map(|t| component(input, t))
                .collect::<Result<Vec<_>>>()?;
            mixture_measure(comps)
        }
        other => Err(Error::Spec {
            what: W,
            input: input.to_string(),
            msg: format!("unknown measure `{other}`"),
        }),
    }
}

impl FromStr for FunctionSpec {
    type Err = Error;

    fn from_str(input: &str) -> Result<Self> {
        const W: &str = "function";
        let call = parse_call(W, input)?;
        let one = |call: &Call| -> Result<f64> {
            arity(W, input, call, &[1])?;
            number(W, input, call.args[0])
        };
        let none = |call: &Call| arity(W, input, call, &[0]);
        Ok(match call.name {
            "identity" | "x" => {
                none(&call)?;
                Self::Identity
            }
            "inverse" | "inv" => {
                none(&call)?;
                Self::Inverse
            }
            "log" => {
                none(&call)?;
                Self::Log
            }
            "abs" => {
                none(&call)?;
                Self::Abs
            }
            "runge" => {
                none(&call)?;
                Self::Runge
            }
            "exp_neg" => Self::ExpNeg(one(&call)?),
            "x2_exp_neg" => Self::X2ExpNeg(one(&call)?),
            "step" => Self::Step(one(&call)?),
            "poly" => {
                if call.args.is_empty() {
                    return Err(Error::Spec {
                        what: W,
                        input: input.to_string(),
                        msg: "poly needs coefficients".into(),
                    });
                }
                Self::Poly(
                    call.args
                        .iter()
                        .map(|a| number(W, input, a))
                        .collect::<Result<_>>()?,
                )
            }
            other => {
                return Err(Error::Spec {
                    what: W,
                    input: input.to_string(),
                    msg: format!("unknown function `{other}`"),
                })
            }
        })
    }
}
