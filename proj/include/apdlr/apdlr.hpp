#pragma once

#include "apdlr/config.hpp"
#include "apdlr/diagnostics.hpp"
#include "apdlr/discretization.hpp"
#include "apdlr/error.hpp"
#include "apdlr/factors.hpp"
#include "apdlr/harness.hpp"
#include "apdlr/imex.hpp"
#include "apdlr/integrator.hpp"
#include "apdlr/mesh.hpp"
#include "apdlr/problems.hpp"
#include "apdlr/reference.hpp"
#include "apdlr/substeps.hpp"
#include "apdlr/time_step.hpp"
#include "apdlr/velocity.hpp"
#include "apdlr/weighted_qr.hpp"
