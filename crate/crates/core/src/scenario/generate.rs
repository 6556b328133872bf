use super::{
    ScenarioConfig, TraitVector, FORMATIVE_AGE_COUNT, FORMATIVE_AGE_MAX, FORMATIVE_AGE_MIN, TRAIT_MAX, TRAIT_MIN,
};
use crate::rng::SimRng;

/// Draw five independent uniform levels in extraversion, neuroticism,
/// openness, conscientiousness, agreeableness order.
pub fn generate_traits(rng: &mut SimRng) -> TraitVector {
    let mut values = [0u32; 5];
    for v in &mut values {
        *v = rng.uniform_inclusive(u64::from(TRAIT_MIN), u64::from(TRAIT_MAX)) as u32;
    }
    TraitVector::new(values)
}

/// Five uniform ages in `5..=40`, drawn with replacement and sorted.
pub fn generate_formative_ages(rng: &mut SimRng) -> Vec<u32> {
    let mut ages: Vec<u32> = (0..FORMATIVE_AGE_COUNT)
        .map(|_| rng.uniform_inclusive(u64::from(FORMATIVE_AGE_MIN), u64::from(FORMATIVE_AGE_MAX)) as u32)
        .collect();
    ages.sort_unstable();
    ages
}

/// Replace every agent's traits and formative ages with draws from a stream
/// seeded by `config.run.seed`. Agents are visited in file order, traits
/// before ages.
pub fn randomize_characteristics(config: &mut ScenarioConfig) {
    let mut rng = SimRng::new(config.run.seed);
    for agent in &mut config.agents {
        agent.traits = generate_traits(&mut rng);
        agent.formative_ages = generate_formative_ages(&mut rng);
    }
}
