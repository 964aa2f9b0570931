#pragma once

#include "otevs/adam.hpp"
#include "otevs/critic.hpp"
#include "otevs/experiment.hpp"
#include "otevs/generator.hpp"
#include "otevs/ledger.hpp"
#include "otevs/measurement.hpp"
#include "otevs/metrics.hpp"
#include "otevs/noise_surrogate.hpp"
#include "otevs/pauli.hpp"
#include "otevs/quantum_sim.hpp"
#include "otevs/rng.hpp"
#include "otevs/trainer.hpp"
