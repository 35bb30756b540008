//! Architecture selectors and the specs they resolve to.
//!
//! Three families are built in. `A(n)` is the plain feed-forward baseline:
//! three trunk layers of `n` neurons and a single joint head emitting both
//! targets. `B` adds a dedicated oxygen branch of two 5-neuron layers next to
//! the joint head. `C` gives each target its own two-layer branch and keeps
//! the joint head. Custom topologies come from a spec file.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use mtlq::network::{BranchSpec, NetworkSpec, TargetLabel};
use mtlq::physics::NUM_FREQUENCIES;

/// Loss-weight triple `(joint, o2, t)` in the conventional reporting order
/// alpha1/alpha2/alpha3.
pub type Alphas = [f64; 3];

pub const DEFAULT_ALPHAS: Alphas = [0.3, 5.0, 1.0];

#[derive(Debug, Clone, PartialEq)]
pub enum ArchitectureSelector {
    A(usize),
    B,
    C,
    Custom(PathBuf),
}

impl ArchitectureSelector {
    /// Short label used for run directories and report rows.
    pub fn label(&self) -> String {
        match self {
            ArchitectureSelector::A(n) => format!("a{n}"),
            ArchitectureSelector::B => "b".to_string(),
            ArchitectureSelector::C => "c".to_string(),
            ArchitectureSelector::Custom(path) => {
                let stem = path
                    .file_stem()
                    .map(|s| s.to_string_lossy().to_string())
                    .unwrap_or_else(|| "custom".to_string());
                format!("custom-{stem}")
            }
        }
    }
}

impl FromStr for ArchitectureSelector {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s.to_ascii_lowercase().as_str() {
            "b" => return Ok(ArchitectureSelector::B),
            "c" => return Ok(ArchitectureSelector::C),
            _ => {}
        }
        if let Some(rest) = s.strip_prefix("spec:") {
            return Ok(ArchitectureSelector::Custom(PathBuf::from(rest)));
        }
        if let Some(n) = s.to_ascii_lowercase().strip_prefix('a') {
            let n: usize = n
                .parse()
                .with_context(|| format!("bad neuron count in network selector '{s}'"))?;
            if n == 0 {
                bail!("network a0 has no neurons");
            }
            return Ok(ArchitectureSelector::A(n));
        }
        bail!("unknown network selector '{s}' (expected aN, b, c, or spec:<file>)");
    }
}

impl fmt::Display for ArchitectureSelector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ArchitectureSelector::Custom(path) => write!(f, "spec:{}", path.display()),
            other => write!(f, "{}", other.label()),
        }
    }
}

/// Resolve a selector to a concrete topology. `alphas` overrides the loss
/// weights of the built-in multi-task families; `A` always uses weight 1.
pub fn build_architecture(
    selector: &ArchitectureSelector,
    alphas: Option<Alphas>,
) -> Result<NetworkSpec> {
    let [a1, a2, a3] = alphas.unwrap_or(DEFAULT_ALPHAS);
    let spec = match selector {
        ArchitectureSelector::A(n) => NetworkSpec {
            input_dim: NUM_FREQUENCIES,
            trunk: vec![*n, *n, *n],
            branches: vec![BranchSpec {
                name: "joint".into(),
                hidden: vec![],
                outputs: vec![TargetLabel::O2, TargetLabel::T],
                loss_weight: 1.0,
            }],
        },
        ArchitectureSelector::B => NetworkSpec {
            input_dim: NUM_FREQUENCIES,
            trunk: vec![50, 50, 50],
            branches: vec![
                BranchSpec {
                    name: "o2".into(),
                    hidden: vec![5, 5],
                    outputs: vec![TargetLabel::O2],
                    loss_weight: a2,
                },
                BranchSpec {
                    name: "joint".into(),
                    hidden: vec![],
                    outputs: vec![TargetLabel::O2, TargetLabel::T],
                    loss_weight: a1,
                },
            ],
        },
        ArchitectureSelector::C => NetworkSpec {
            input_dim: NUM_FREQUENCIES,
            trunk: vec![50, 50, 50],
            branches: vec![
                BranchSpec {
                    name: "o2".into(),
                    hidden: vec![5, 5],
                    outputs: vec![TargetLabel::O2],
                    loss_weight: a2,
                },
                BranchSpec {
                    name: "t".into(),
                    hidden: vec![5, 5],
                    outputs: vec![TargetLabel::T],
                    loss_weight: a3,
                },
                BranchSpec {
                    name: "joint".into(),
                    hidden: vec![],
                    outputs: vec![TargetLabel::O2, TargetLabel::T],
                    loss_weight: a1,
                },
            ],
        },
        ArchitectureSelector::Custom(path) => parse_spec_file(path)?,
    };
    spec.validate()
        .with_context(|| format!("invalid architecture {selector:?}"))?;
    Ok(spec)
}

/// Parse a custom topology file:
///
/// ```text
/// input_dim = 16
/// trunk = 50,50,50
/// branch = o2 | 5,5 | O2 | 5.0
/// branch = joint | - | O2,T | 0.3
/// ```
///
/// Branch fields are name, hidden widths (`-` for none), output labels, and
/// loss weight; declaration order is preserved.
pub fn parse_spec_file(path: &Path) -> Result<NetworkSpec> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading network spec {}", path.display()))?;
    let mut input_dim = NUM_FREQUENCIES;
    let mut trunk = Vec::new();
    let mut branches = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .with_context(|| format!("line {}: expected key = value", lineno + 1))?;
        let (key, value) = (key.trim(), value.trim());
        match key {
            "input_dim" => input_dim = value.parse()?,
            "trunk" => {
                trunk = if value == "-" || value.is_empty() {
                    vec![]
                } else {
                    value
                        .split(',')
                        .map(|v| v.trim().parse::<usize>())
                        .collect::<std::result::Result<_, _>>()?
                };
            }
            "branch" => {
                let fields: Vec<&str> = value.split('|').map(str::trim).collect();
                if fields.len() != 4 {
                    bail!(
                        "line {}: branch needs 'name | hidden | outputs | weight'",
                        lineno + 1
                    );
                }
                let hidden = if fields[1] == "-" || fields[1].is_empty() {
                    vec![]
                } else {
                    fields[1]
                        .split(',')
                        .map(|v| v.trim().parse::<usize>())
                        .collect::<std::result::Result<_, _>>()?
                };
                let outputs = fields[2]
                    .split(',')
                    .map(TargetLabel::parse)
                    .collect::<mtlq::Result<Vec<_>>>()?;
                branches.push(BranchSpec {
                    name: fields[0].to_string(),
                    hidden,
                    outputs,
                    loss_weight: fields[3].parse()?,
                });
            }
            other => bail!("line {}: unknown spec key '{other}'", lineno + 1),
        }
    }
    Ok(NetworkSpec {
        input_dim,
        trunk,
        branches,
    })
}

/// Which branch and output column provide the reported prediction for each
/// target: the branch with the most task-specific hidden layers wins, ties
/// broken by declaration order.
pub fn prediction_source(spec: &NetworkSpec, label: TargetLabel) -> Option<(usize, usize)> {
    let mut best: Option<(usize, usize, usize)> = None;
    for (bi, branch) in spec.branches.iter().enumerate() {
        if let Some(col) = branch.outputs.iter().position(|&l| l == label) {
            let depth = branch.hidden.len();
            if best.is_none_or(|(_, _, d)| depth > d) {
                best = Some((bi, col, depth));
            }
        }
    }
    best.map(|(bi, col, _)| (bi, col))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn selector_parsing() {
        assert_eq!(
            "a50".parse::<ArchitectureSelector>().unwrap(),
            ArchitectureSelector::A(50)
        );
        assert_eq!(
            "B".parse::<ArchitectureSelector>().unwrap(),
            ArchitectureSelector::B
        );
        assert_eq!(
            "c".parse::<ArchitectureSelector>().unwrap(),
            ArchitectureSelector::C
        );
        assert!(matches!(
            "spec:nets/my.spec".parse::<ArchitectureSelector>().unwrap(),
            ArchitectureSelector::Custom(_)
        ));
        assert!("q5".parse::<ArchitectureSelector>().is_err());
        assert!("a0".parse::<ArchitectureSelector>().is_err());
    }

    #[test]
    fn network_a_is_a_single_joint_head() {
        let spec = build_architecture(&ArchitectureSelector::A(50), None).unwrap();
        assert_eq!(spec.trunk, vec![50, 50, 50]);
        assert_eq!(spec.branches.len(), 1);
        assert_eq!(spec.branches[0].loss_weight, 1.0);
        // 16*50+50 + 2*(50*50+50) + (50*2+2)
        assert_eq!(spec.param_count(), 6052);
    }

    #[test]
    fn network_b_has_two_branches_with_default_weights() {
        let spec = build_architecture(&ArchitectureSelector::B, None).unwrap();
        assert_eq!(spec.branches.len(), 2);
        assert_eq!(spec.branches[0].name, "o2");
        assert_eq!(spec.branches[0].hidden, vec![5, 5]);
        assert_eq!(spec.branches[0].loss_weight, 5.0);
        assert_eq!(spec.branches[1].name, "joint");
        assert!(spec.branches[1].hidden.is_empty());
        assert_eq!(spec.branches[1].loss_weight, 0.3);
    }

    #[test]
    fn network_c_has_three_branches_and_honors_alpha_override() {
        let spec = build_architecture(&ArchitectureSelector::C, None).unwrap();
        assert_eq!(spec.branches.len(), 3);
        assert_eq!(
            spec.branches.iter().map(|b| b.name.as_str()).collect::<Vec<_>>(),
            vec!["o2", "t", "joint"]
        );
        let custom = build_architecture(&ArchitectureSelector::C, Some([0.5, 7.0, 2.0])).unwrap();
        assert_eq!(custom.branches[0].loss_weight, 7.0); // o2 <- alpha2
        assert_eq!(custom.branches[1].loss_weight, 2.0); // t <- alpha3
        assert_eq!(custom.branches[2].loss_weight, 0.5); // joint <- alpha1
    }

    #[test]
    fn deepest_branch_provides_the_prediction() {
        let c = build_architecture(&ArchitectureSelector::C, None).unwrap();
        assert_eq!(prediction_source(&c, TargetLabel::O2), Some((0, 0)));
        assert_eq!(prediction_source(&c, TargetLabel::T), Some((1, 0)));
        let b = build_architecture(&ArchitectureSelector::B, None).unwrap();
        assert_eq!(prediction_source(&b, TargetLabel::O2), Some((0, 0)));
        // temperature only exists on the joint head, column 1
        assert_eq!(prediction_source(&b, TargetLabel::T), Some((1, 1)));
        let a = build_architecture(&ArchitectureSelector::A(30), None).unwrap();
        assert_eq!(prediction_source(&a, TargetLabel::O2), Some((0, 0)));
        assert_eq!(prediction_source(&a, TargetLabel::T), Some((0, 1)));
    }

    #[test]
    fn custom_spec_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("net.spec");
        std::fs::write(
            &path,
            "# custom\ninput_dim = 16\ntrunk = 20,20\nbranch = o2 | 4 | O2 | 2.0\nbranch = joint | - | O2,T | 0.5\n",
        )
        .unwrap();
        let spec = build_architecture(&ArchitectureSelector::Custom(path), None).unwrap();
        assert_eq!(spec.trunk, vec![20, 20]);
        assert_eq!(spec.branches.len(), 2);
        assert_eq!(spec.branches[0].hidden, vec![4]);
        assert_eq!(spec.branches[1].loss_weight, 0.5);
    }
}
