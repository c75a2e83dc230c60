#pragma once

#include "acausal/errors.hpp"
#include "acausal/labeled_operator.hpp"
#include "acausal/pauli.hpp"
#include "acausal/rng.hpp"
#include "acausal/choi.hpp"
#include "acausal/comb.hpp"
#include "acausal/process_matrix.hpp"
#include "acausal/separability.hpp"
#include "acausal/circuits.hpp"
#include "acausal/neumark.hpp"
#include "acausal/resources.hpp"
#include "acausal/json_io.hpp"
