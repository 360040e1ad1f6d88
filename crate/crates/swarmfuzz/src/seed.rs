//! Swarm-driven seed generation.
//!
//! Each fuzzer thread pairs its scheduling particle with a seed particle
//! whose position holds one instruction-type distribution per program slot.
//! Generating a seed samples the type for every slot from its row, then
//! draws the opcode and operands uniformly from the ISA tables. A seed
//! particle's fitness is how many iterations its paired scheduling particle
//! survived before being reset, so the seed swarm is only evaluated on
//! iterations in which scheduling particles were reset.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::isa::{random_instruction_of_type, TestProgram, INSTR_TYPES};
use crate::pso::{Position, Swarm};

/// Iterations a scheduling particle survived between resets; the objective
/// the seed swarm maximizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SurvivalFitness {
    pub iterations_survived: u64,
}

/// Generate one program from a seed position: type per slot from the row,
/// opcode and operands uniform from the tables.
pub fn gen_seed(position: &Position, id: impl Into<String>, rng: &mut impl Rng) -> TestProgram {
    let words = position
        .rows()
        .iter()
        .map(|row| {
            debug_assert_eq!(row.len(), INSTR_TYPES.len());
            let ty = INSTR_TYPES[row.sample(rng)];
            random_instruction_of_type(ty, rng)
        })
        .collect();
    TestProgram::new(id, words)
}

/// Survival fitness for a particle reset this iteration: iterations since
/// its last reset (or since the campaign started).
pub fn survival_fitness(
    reset_particles: &[usize],
    particle: usize,
    created_at_iter: u64,
    current_iter: u64,
) -> Result<SurvivalFitness, Error> {
    if !reset_particles.contains(&particle) {
        return Err(Error::NotReset(particle));
    }
    Ok(SurvivalFitness {
        iterations_survived: current_iter.saturating_sub(created_at_iter),
    })
}

/// One seed-swarm round: fold the survival fitness of the just-reset
/// scheduling particles into the monitor (other particles are untouched),
/// then run the velocity/position step row-wise. Returns the seed particles
/// that were themselves reset.
pub fn update_seed_swarm(
    swarm: &mut Swarm,
    fitness: &[Option<f64>],
    beta_t: u32,
    k: f64,
    rng: &mut impl Rng,
) -> Result<Vec<usize>, Error> {
    let reset = swarm.monitor(beta_t, fitness);
    swarm.update(k, &reset, rng)?;
    Ok(reset)
}
