#ifndef QGLAND_QGLAND_HPP
#define QGLAND_QGLAND_HPP

// Everything: graphs, spectra, envelopes, verification, harness.

#include <qgland/agmon.hpp>
#include <qgland/case_studies.hpp>
#include <qgland/envelope.hpp>
#include <qgland/error.hpp>
#include <qgland/graph.hpp>
#include <qgland/harness.hpp>
#include <qgland/local_bounds.hpp>
#include <qgland/potential.hpp>
#include <qgland/spectral.hpp>
#include <qgland/torsion.hpp>
#include <qgland/uniform.hpp>
#include <qgland/verify.hpp>

#endif
