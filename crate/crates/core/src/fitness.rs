//! Scoring a genome against the (input, target) pair.
//!
//! F = D/max(L1,1) + (S/2)^2 + L2/10000, lower is better: D counts
//! differing lines between the transform output and the target, S
//! penalizes outputs shorter than the target, and L2 keeps selective
//! pressure toward compact stylesheets. An exact match scores L2/10000,
//! so a solution is recognized by D = 0 alone.

use serde::Serialize;

use crate::engine::{rendered_line_count, transform, Stylesheet};
use crate::genome::Genome;
use crate::xml::{diff_count, Document};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FitnessReport {
    /// Lines differing between output and target (D).
    pub d: usize,
    /// Output line count (L1).
    pub l1: usize,
    /// Stylesheet line count (L2).
    pub l2: usize,
    /// Length shortfall max(0, target - L1) (S).
    pub s: usize,
    /// The combined score (F).
    pub f: f64,
    pub solution: bool,
}

fn combine(d: usize, l1: usize, s: usize, l2: usize) -> f64 {
    d as f64 / (l1.max(1)) as f64 + (s as f64 / 2.0).powi(2) + l2 as f64 / 10000.0
}

/// Transforms the input with the genome's stylesheet and scores the result
/// against `target_lines`. Degenerate genomes whose transform aborts (the
/// recursion or output guard) are scored, not rejected: they get the
/// worst-case construction d = s = target length with an empty output.
pub fn evaluate(genome: &Genome, input: &Document, target_lines: &[String]) -> FitnessReport {
    evaluate_sheet(&genome.sheet, input, target_lines)
}

/// Scores a bare stylesheet; the report depends only on the sheet's
/// behavior and rendered length, never on a structure type.
pub fn evaluate_sheet(
    sheet: &Stylesheet,
    input: &Document,
    target_lines: &[String],
) -> FitnessReport {
    let l2 = rendered_line_count(sheet);
    let t = target_lines.len();
    match transform(sheet, input) {
        Ok(output) => {
            let lines = output.canonical_lines();
            let l1 = lines.len();
            let d = diff_count(&lines, target_lines).d;
            let s = t.saturating_sub(l1);
            FitnessReport {
                d,
                l1,
                l2,
                s,
                f: combine(d, l1, s, l2),
                solution: d == 0,
            }
        }
        Err(_) => FitnessReport {
            d: t,
            l1: 0,
            l2,
            s: t,
            f: combine(t, 0, t, l2),
            solution: false,
        },
    }
}

pub fn is_solution(report: &FitnessReport) -> bool {
    report.d == 0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{parse_stylesheet, Instruction, MatchPattern, Stylesheet, Template};
    use crate::genome::{build_profile, random_genome, InitParams, StructureType};
    use crate::xml::parse_document;
    use crate::xpath::{parse_path, PathExpr};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const DOC1: &str = include_str!("../fixtures/doc1.xml");
    const TARGET1: &str = include_str!("../fixtures/target1.xml");
    const SOLUTION: &str = include_str!("../fixtures/solution_doc1.xsl");

    fn target_lines() -> Vec<String> {
        parse_document(TARGET1).unwrap().canonical_lines()
    }

    #[test]
    fn combine_matches_hand_substitution() {
        assert_eq!(combine(0, 10, 0, 17), 0.0017);
        assert_eq!(combine(5, 10, 4, 20), 4.502);
        // empty output: denominator clamps to 1
        assert_eq!(combine(8, 0, 8, 12), 24.0012);
    }

    #[test]
    fn known_solution_scores_only_its_length() {
        let sheet = parse_stylesheet(SOLUTION).unwrap();
        let genome = Genome {
            stype: StructureType::Type2,
            sheet,
        };
        let input = parse_document(DOC1).unwrap();
        let report = evaluate(&genome, &input, &target_lines());
        assert_eq!(report.d, 0);
        assert_eq!(report.s, 0);
        assert!(report.solution);
        assert!(is_solution(&report));
        assert_eq!(report.f, report.l2 as f64 / 10000.0);
    }

    #[test]
    fn unused_template_costs_strictly_more() {
        let mut sheet = parse_stylesheet(SOLUTION).unwrap();
        sheet.templates.push(Template {
            pattern: MatchPattern::Name("fecha_grabacion".into()),
            body: vec![Instruction::ValueOf {
                select: PathExpr::self_node(),
            }],
        });
        let bloated = Genome {
            stype: StructureType::Type2,
            sheet,
        };
        let lean = Genome {
            stype: StructureType::Type2,
            sheet: parse_stylesheet(SOLUTION).unwrap(),
        };
        let input = parse_document(DOC1).unwrap();
        let target = target_lines();
        let a = evaluate(&lean, &input, &target);
        let b = evaluate(&bloated, &input, &target);
        assert_eq!(a.d, b.d);
        assert!(a.l2 < b.l2);
        assert!(a.f < b.f);
    }

    #[test]
    fn aborting_genome_gets_worst_case_score() {
        // a template that re-applies its own match never terminates
        let sheet = Stylesheet {
            templates: vec![
                Template {
                    pattern: MatchPattern::Root,
                    body: vec![Instruction::Apply {
                        select: parse_path("/biblioteca_musical/disco").unwrap(),
                    }],
                },
                Template {
                    pattern: MatchPattern::Name("disco".into()),
                    body: vec![Instruction::Apply {
                        select: parse_path(".").unwrap(),
                    }],
                },
            ],
        };
        let genome = Genome {
            stype: StructureType::Type1,
            sheet,
        };
        let input = parse_document(DOC1).unwrap();
        let target = target_lines();
        let t = target.len();
        let report = evaluate(&genome, &input, &target);
        assert!(!report.solution);
        assert_eq!(report.d, t);
        assert_eq!(report.l1, 0);
        assert_eq!(report.s, t);
        assert_eq!(
            report.f,
            t as f64 + (t as f64 / 2.0).powi(2) + report.l2 as f64 / 10000.0
        );
    }

    #[test]
    fn evaluate_is_pure_and_internally_consistent() {
        let input = parse_document(DOC1).unwrap();
        let profile = build_profile(&input);
        let params = InitParams::default();
        let target = target_lines();
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for stype in StructureType::ALL {
            for _ in 0..500 {
                let g = random_genome(stype, &profile, &params, &mut rng);
                let a = evaluate(&g, &input, &target);
                let b = evaluate(&g, &input, &target);
                assert_eq!(a.f.to_bits(), b.f.to_bits());
                assert_eq!(a, b);
                // the report's fields recompute its own F
                let again = combine(a.d, a.l1, a.s, a.l2);
                assert!((a.f - again).abs() < 1e-12);
                assert!(a.f >= a.l2 as f64 / 10000.0);
                assert!(a.f > 0.0);
                assert_eq!(a.solution, a.d == 0);
            }
        }
    }
}
