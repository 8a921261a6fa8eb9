#pragma once

#include "polydg/agglomerate.hpp"
#include "polydg/assembly.hpp"
#include "polydg/basis.hpp"
#include "polydg/config.hpp"
#include "polydg/geometry.hpp"
#include "polydg/mesh.hpp"
#include "polydg/mesh_io.hpp"
#include "polydg/metrics.hpp"
#include "polydg/norms.hpp"
#include "polydg/penalty.hpp"
#include "polydg/problems.hpp"
#include "polydg/quadrature.hpp"
#include "polydg/solve.hpp"
#include "polydg/study.hpp"
#include "polydg/verify.hpp"
#include "polydg/voronoi.hpp"
