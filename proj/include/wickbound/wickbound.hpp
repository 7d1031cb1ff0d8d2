#pragma once

#include "wickbound/clustering.hpp"
#include "wickbound/config.hpp"
#include "wickbound/cumulants.hpp"
#include "wickbound/dnls.hpp"
#include "wickbound/fields/discrete.hpp"
#include "wickbound/fields/ensemble.hpp"
#include "wickbound/fields/gaussian.hpp"
#include "wickbound/fields/spectral.hpp"
#include "wickbound/partitions.hpp"
#include "wickbound/report.hpp"
