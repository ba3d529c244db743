#include "data/dataset_io.hpp"

#include "data/csv.hpp"
#include "util/errors.hpp"

#include <cmath>
#include <map>

namespace fs = std::filesystem;

namespace mepo::data {

namespace {

using RegionIndex = std::map<std::string, std::size_t, std::less<>>;

RegionIndex index_regions(const RegionTable& regions)
{
    RegionIndex idx;
    for (std::size_t i = 0; i < regions.size(); ++i) {
        idx.emplace(regions[i].id, i);
    }
    return idx;
}

std::size_t lookup_region(const CsvReader& r, std::size_t col, const RegionIndex& idx)
{
    auto it = idx.find(r.field(col));
    if (it == idx.end()) {
        r.error(col, "unknown region id '" + r.text(col) + "'");
    }
    return it->second;
}

Date parse_date(const CsvReader& r, std::size_t col)
{
    auto d = Date::parse(r.field(col));
    if (!d) {
        r.error(col, "invalid ISO-8601 date '" + r.text(col) + "'");
    }
    return *d;
}

// Per (region, day) table covering [start, start + days).
class DailyTable
{
public:
    DailyTable(std::size_t regions, const Date& start, std::size_t days, std::size_t columns)
        : start_(start)
        , days_(days)
        , seen_(nc::Shape{regions, days}, 0.0)
    {
        for (std::size_t c = 0; c < columns; ++c) {
            values_.emplace_back(nc::Shape{regions, days}, 0.0);
        }
    }

    void set(const CsvReader& r, std::size_t date_col, std::size_t region, const Date& d,
             const std::vector<double>& vals)
    {
        const long off = d.minus(start_);
        if (off < 0 || static_cast<std::size_t>(off) >= days_) {
            r.error(date_col, "date " + d.iso() + " outside the case-series range");
        }
        if (seen_.at(region, std::size_t(off)) != 0.0) {
            r.error(date_col, "duplicate record for this region and date");
        }
        seen_.at(region, std::size_t(off)) = 1.0;
        for (std::size_t c = 0; c < vals.size(); ++c) {
            values_[c].at(region, std::size_t(off)) = vals[c];
        }
    }

    void check_complete(const std::string& file, const RegionTable& regions) const
    {
        for (std::size_t n = 0; n < regions.size(); ++n) {
            for (std::size_t t = 0; t < days_; ++t) {
                if (seen_.at(n, t) == 0.0) {
                    fail(ErrorKind::DataIntegrity, file + ": no record for region '" + regions[n].id + "' on " +
                                                       start_.plus(long(t)).iso());
                }
            }
        }
    }

    Array& column(std::size_t c) { return values_[c]; }

private:
    Date start_;
    std::size_t days_;
    Array seen_;
    std::vector<Array> values_;
};

} // namespace

DataPaths DataPaths::in_directory(const fs::path& dir)
{
    DataPaths p;
    auto opt = [&](const char* name) {
        auto f = dir / name;
        return fs::exists(f) ? f.string() : std::string();
    };
    p.regions = (dir / "regions.csv").string();
    p.cases = (dir / "cases.csv").string();
    p.movement = opt("movement.csv");
    p.flows_static = opt("flows_static.csv");
    p.flows_dynamic = opt("flows_dynamic.csv");
    p.unique_users = opt("nuid.csv");
    p.distances = opt("distances.csv");
    p.truth = opt("truth.csv");
    return p;
}

std::vector<std::string> DataPaths::present() const
{
    std::vector<std::string> out;
    for (const auto* s : {&regions, &cases, &movement, &flows_static, &flows_dynamic, &unique_users, &distances,
                          &truth}) {
        if (!s->empty()) {
            out.push_back(*s);
        }
    }
    return out;
}

RegionTable read_regions(const std::string& path)
{
    CsvReader r(path, {"region_id", "population"});
    RegionTable regions;
    while (r.next()) {
        Region reg{r.text(0), r.number(1)};
        if (reg.id.empty()) {
            r.error(0, "empty region id");
        }
        if (!(reg.population > 0.0)) {
            r.error(1, "population must be positive");
        }
        for (const auto& other : regions) {
            if (other.id == reg.id) {
                r.error(0, "duplicate region id '" + reg.id + "'");
            }
        }
        regions.push_back(reg);
    }
    validate_regions(regions);
    return regions;
}

Array read_static_flows(const std::string& path, const RegionTable& regions, const std::string& value_column)
{
    CsvReader r(path, {"origin", "destination", value_column});
    const auto idx = index_regions(regions);
    Array m(nc::Shape{regions.size(), regions.size()}, 0.0);
    while (r.next()) {
        const auto o = lookup_region(r, 0, idx);
        const auto d = lookup_region(r, 1, idx);
        const double v = r.number(2);
        if (v < 0.0) {
            r.error(2, "value must be nonnegative");
        }
        m.at(o, d) = v;
    }
    return m;
}

Array read_dynamic_flows(const std::string& path, const RegionTable& regions, const Date& start, std::size_t days)
{
    const auto n_reg = regions.size();
    const auto idx = index_regions(regions);
    Array flows(nc::Shape{days, n_reg, n_reg}, 0.0);
    std::vector<bool> day_seen(days, false);
    CsvReader r(path, {"date", "origin", "destination", "flow"});
    while (r.next()) {
        const auto d = parse_date(r, 0);
        const long off = d.minus(start);
        if (off < 0 || static_cast<std::size_t>(off) >= days) {
            r.error(0, "date " + d.iso() + " outside the case-series range");
        }
        const double v = r.number(3);
        if (v < 0.0) {
            r.error(3, "flow must be nonnegative");
        }
        flows.at(std::size_t(off), lookup_region(r, 1, idx), lookup_region(r, 2, idx)) = v;
        day_seen[std::size_t(off)] = true;
    }
    for (std::size_t t = 0; t < days; ++t) {
        if (!day_seen[t]) {
            fail(ErrorKind::DataIntegrity, path + ": no flows recorded on " + start.plus(long(t)).iso());
        }
    }
    return flows;
}

Dataset load_dataset(const DataPaths& paths)
{
    Dataset ds;
    ds.regions = read_regions(paths.regions);
    const auto n_reg = ds.regions.size();
    const auto idx = index_regions(ds.regions);

    struct CaseRow
    {
        Date date;
        std::size_t region;
        double daily, removed;
        std::size_t line;
    };
    std::vector<CaseRow> rows;
    {
        CsvReader r(paths.cases, {"date", "region_id", "daily_confirmed", "cum_removed"});
        while (r.next()) {
            CaseRow row{parse_date(r, 0), lookup_region(r, 1, idx), r.number(2), r.number(3), r.line()};
            if (row.daily < 0.0) {
                r.error(2, "daily_confirmed must be nonnegative");
            }
            if (row.removed < 0.0) {
                r.error(3, "cum_removed must be nonnegative");
            }
            rows.push_back(row);
        }
        if (rows.empty()) {
            fail(ErrorKind::DataIntegrity, paths.cases + ": no records");
        }
    }
    Date first = rows[0].date, last = rows[0].date;
    for (const auto& row : rows) {
        first = std::min(first, row.date);
        last = std::max(last, row.date);
    }
    ds.start = first;
    const auto days = static_cast<std::size_t>(last.minus(first)) + 1;
    {
        DailyTable table(n_reg, first, days, 2);
        CsvReader r(paths.cases, {"date", "region_id", "daily_confirmed", "cum_removed"});
        while (r.next()) {
            table.set(r, 0, lookup_region(r, 1, idx), parse_date(r, 0), {r.number(2), r.number(3)});
        }
        table.check_complete(paths.cases, ds.regions);
        ds.cases.daily_confirmed = table.column(0);
        ds.cases.cum_removed = table.column(1);
        for (std::size_t n = 0; n < n_reg; ++n) {
            for (std::size_t t = 1; t < days; ++t) {
                if (ds.cases.cum_removed.at(n, t) < ds.cases.cum_removed.at(n, t - 1)) {
                    fail(ErrorKind::DataIntegrity, paths.cases + ": cum_removed decreases for region '" +
                                                       ds.regions[n].id + "' on " + first.plus(long(t)).iso());
                }
            }
        }
    }

    if (!paths.movement.empty()) {
        DailyTable table(n_reg, first, days, 2);
        CsvReader r(paths.movement, {"date", "region_id", "movement_change", "stay_put_ratio"});
        while (r.next()) {
            const double stay = r.number(3);
            if (stay < 0.0 || stay > 1.0) {
                r.error(3, "stay_put_ratio must lie in [0, 1]");
            }
            table.set(r, 0, lookup_region(r, 1, idx), parse_date(r, 0), {r.number(2), stay});
        }
        table.check_complete(paths.movement, ds.regions);
        ds.movement_change = table.column(0);
        ds.stay_put = table.column(1);
    }
    else {
        ds.movement_change = Array(nc::Shape{n_reg, days}, 0.0);
        ds.stay_put = Array(nc::Shape{n_reg, days}, 0.0);
    }

    if (!paths.flows_static.empty()) {
        ds.flows_static = read_static_flows(paths.flows_static, ds.regions, "flow");
    }
    if (!paths.distances.empty()) {
        ds.distances = read_static_flows(paths.distances, ds.regions, "km");
    }

    if (!paths.flows_dynamic.empty()) {
        ds.flows_dynamic = read_dynamic_flows(paths.flows_dynamic, ds.regions, first, days);
    }

    if (!paths.unique_users.empty()) {
        DailyTable table(n_reg, first, days, 1);
        CsvReader r(paths.unique_users, {"date", "region_id", "unique_users"});
        while (r.next()) {
            const double v = r.number(2);
            if (v < 0.0) {
                r.error(2, "unique_users must be nonnegative");
            }
            table.set(r, 0, lookup_region(r, 1, idx), parse_date(r, 0), {v});
        }
        table.check_complete(paths.unique_users, ds.regions);
        ds.unique_users = table.column(0);
    }

    if (!paths.truth.empty()) {
        DailyTable table(n_reg, first, days, 2);
        CsvReader r(paths.truth, {"date", "region_id", "beta", "gamma"});
        while (r.next()) {
            table.set(r, 0, lookup_region(r, 1, idx), parse_date(r, 0), {r.number(2), r.number(3)});
        }
        table.check_complete(paths.truth, ds.regions);
        ds.true_beta = table.column(0);
        ds.true_gamma = table.column(1);
    }
    return ds;
}

void write_regions(const RegionTable& regions, const fs::path& path)
{
    CsvWriter w(path, {"region_id", "population"});
    for (const auto& r : regions) {
        w << r.id << r.population;
        w.end_row();
    }
    w.close();
}

void write_matrix(const Array& m, const RegionTable& regions, const fs::path& path, const std::string& value_column)
{
    CsvWriter w(path, {"origin", "destination", value_column});
    for (std::size_t i = 0; i < regions.size(); ++i) {
        for (std::size_t j = 0; j < regions.size(); ++j) {
            w << regions[i].id << regions[j].id << m.at(i, j);
            w.end_row();
        }
    }
    w.close();
}

void write_dynamic_flows(const Array& flows, const RegionTable& regions, const Date& start, const fs::path& path)
{
    CsvWriter w(path, {"date", "origin", "destination", "flow"});
    for (std::size_t t = 0; t < flows.dim(0); ++t) {
        const auto date = start.plus(long(t)).iso();
        for (std::size_t i = 0; i < regions.size(); ++i) {
            for (std::size_t j = 0; j < regions.size(); ++j) {
                w << date << regions[i].id << regions[j].id << flows.at(t, i, j);
                w.end_row();
            }
        }
    }
    w.close();
}

void save_dataset(const Dataset& ds, const fs::path& dir)
{
    fs::create_directories(dir);
    write_regions(ds.regions, dir / "regions.csv");
    const auto n_reg = ds.regions.size();
    const auto days = ds.days();
    {
        CsvWriter w(dir / "cases.csv", {"date", "region_id", "daily_confirmed", "cum_removed"});
        for (std::size_t t = 0; t < days; ++t) {
            const auto date = ds.date(t).iso();
            for (std::size_t n = 0; n < n_reg; ++n) {
                w << date << ds.regions[n].id << ds.cases.daily_confirmed.at(n, t) << ds.cases.cum_removed.at(n, t);
                w.end_row();
            }
        }
        w.close();
    }
    {
        CsvWriter w(dir / "movement.csv", {"date", "region_id", "movement_change", "stay_put_ratio"});
        for (std::size_t t = 0; t < days; ++t) {
            const auto date = ds.date(t).iso();
            for (std::size_t n = 0; n < n_reg; ++n) {
                w << date << ds.regions[n].id << ds.movement_change.at(n, t) << ds.stay_put.at(n, t);
                w.end_row();
            }
        }
        w.close();
    }
    if (ds.flows_static) {
        write_matrix(*ds.flows_static, ds.regions, dir / "flows_static.csv", "flow");
    }
    if (ds.distances) {
        write_matrix(*ds.distances, ds.regions, dir / "distances.csv", "km");
    }
    if (ds.flows_dynamic) {
        write_dynamic_flows(*ds.flows_dynamic, ds.regions, ds.start, dir / "flows_dynamic.csv");
    }
    if (ds.unique_users) {
        CsvWriter w(dir / "nuid.csv", {"date", "region_id", "unique_users"});
        for (std::size_t t = 0; t < days; ++t) {
            const auto date = ds.date(t).iso();
            for (std::size_t n = 0; n < n_reg; ++n) {
                w << date << ds.regions[n].id << ds.unique_users->at(n, t);
                w.end_row();
            }
        }
        w.close();
    }
    if (ds.true_beta && ds.true_gamma) {
        CsvWriter w(dir / "truth.csv", {"date", "region_id", "beta", "gamma"});
        for (std::size_t t = 0; t < days; ++t) {
            const auto date = ds.date(t).iso();
            for (std::size_t n = 0; n < n_reg; ++n) {
                w << date << ds.regions[n].id << ds.true_beta->at(n, t) << ds.true_gamma->at(n, t);
                w.end_row();
            }
        }
        w.close();
    }
}

} // namespace mepo::data
