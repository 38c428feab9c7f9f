#ifndef QND_QND_HPP
#define QND_QND_HPP

#include "qnd/analysis.hpp"
#include "qnd/csv_io.hpp"
#include "qnd/estimators.hpp"
#include "qnd/model.hpp"
#include "qnd/params.hpp"
#include "qnd/report.hpp"
#include "qnd/simulator.hpp"

#endif  // QND_QND_HPP
