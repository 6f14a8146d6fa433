//! Long-running KD stress check, excluded from the default run.

mod support;

use argus_core::deontic::{kd_satisfiable, Satisfiability};

#[test]
#[ignore = "slow stress check; run explicitly"]
fn kd_tableau_stress_against_enumeration() {
    let atoms: Vec<String> = ["p", "q", "r"].iter().map(|s| s.to_string()).collect();
    let mut rng = support::seeded(0xfeed);
    let mut unsat = 0;
    for i in 0..2000 {
        let mut ops = 0;
        let formula = support::random_modal_formula(&mut rng, 8, &mut ops, 2);
        let tableau_sat = match kd_satisfiable(&formula) {
            Satisfiability::Satisfiable { model, world } => {
                assert!(model.is_serial());
                assert!(model.satisfies(&world, &formula));
                true
            }
            Satisfiability::Unsatisfiable => false,
        };
        let oracle_sat = support::exists_serial_model(&formula, &atoms, 3);
        assert_eq!(tableau_sat, oracle_sat, "disagreement on {formula} (case {i})");
        unsat += usize::from(!tableau_sat);
    }
    println!("2000 formulas, {unsat} unsatisfiable, zero disagreements");
}

#[test]
#[ignore = "slow stress check; run explicitly"]
fn specificity_stress_against_the_family_oracle() {
    use argus_core::derivation::Argument;
    use argus_core::specificity::{more_specific_poole, relevant_universe, SpecificityConfig};

    let mut rng = support::seeded(0xacce);
    let config = SpecificityConfig::default();
    let mut comparisons = 0usize;
    let mut kbs = 0usize;
    while kbs < 1000 {
        let kb = support::random_ground_kb(&mut rng, 4, 10);
        let Some(args) = support::arguments_of(&kb, 4) else { continue };
        let args: Vec<Argument> = args.into_iter().take(5).collect();
        if args.len() < 2 {
            continue;
        }
        let mut compared = false;
        for i in 0..args.len() {
            for j in i + 1..args.len() {
                let universe = relevant_universe([&args[i], &args[j]]);
                if universe.len() > 10 {
                    continue;
                }
                for (a, b) in [(&args[i], &args[j]), (&args[j], &args[i])] {
                    let produced = more_specific_poole(&kb, a, b, &universe, &config).unwrap();
                    let expected = support::oracle_more_specific(&kb, a, b, universe.literals());
                    assert_eq!(produced, expected, "disagreement in\n{kb}");
                    comparisons += 1;
                    compared = true;
                }
            }
        }
        kbs += usize::from(compared);
    }
    println!("{comparisons} comparisons over {kbs} knowledge bases, zero disagreements");
}
