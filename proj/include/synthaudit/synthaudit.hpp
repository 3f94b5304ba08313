#pragma once

#include "synthaudit/error.hpp"
#include "synthaudit/rng.hpp"
#include "synthaudit/table.hpp"
#include "synthaudit/text.hpp"
#include "synthaudit/ingest.hpp"
#include "synthaudit/marginal.hpp"
#include "synthaudit/dependence.hpp"
#include "synthaudit/glasso.hpp"
#include "synthaudit/network.hpp"
#include "synthaudit/cumulants.hpp"
#include "synthaudit/probes.hpp"
#include "synthaudit/report.hpp"
