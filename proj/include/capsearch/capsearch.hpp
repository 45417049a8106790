#pragma once

#include "capsearch/backend.hpp"
#include "capsearch/errors.hpp"
#include "capsearch/estimator.hpp"
#include "capsearch/ledger.hpp"
#include "capsearch/params.hpp"
#include "capsearch/report.hpp"
#include "capsearch/rng.hpp"
#include "capsearch/runtime_table.hpp"
#include "capsearch/schedule.hpp"
#include "capsearch/search.hpp"
#include "capsearch/subprocess.hpp"
#include "capsearch/synthetic.hpp"
#include "capsearch/verify.hpp"
#include "capsearch/version.hpp"
