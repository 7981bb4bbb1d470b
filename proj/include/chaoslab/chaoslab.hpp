#pragma once

// Everything in one include.
#include "chaoslab/errors.hpp"
#include "chaoslab/rng.hpp"
#include "chaoslab/field_kernels.hpp"
#include "chaoslab/fft.hpp"
#include "chaoslab/binary.hpp"
#include "chaoslab/gaussian_sampler.hpp"
#include "chaoslab/stats.hpp"
#include "chaoslab/parallel.hpp"
#include "chaoslab/chaos_measure.hpp"
#include "chaoslab/cascade.hpp"
#include "chaoslab/tail_lab.hpp"
#include "chaoslab/poisson_solver.hpp"
#include "chaoslab/inequality_oracles.hpp"
#include "chaoslab/modulus_lab.hpp"
#include "chaoslab/io.hpp"
#include "chaoslab/experiment.hpp"
