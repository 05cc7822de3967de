#pragma once

#include "epb/analytic.hpp"
#include "epb/errors.hpp"
#include "epb/hilbert.hpp"
#include "epb/master.hpp"
#include "epb/parallel.hpp"
#include "epb/params.hpp"
#include "epb/scenario.hpp"
#include "epb/spectra.hpp"
