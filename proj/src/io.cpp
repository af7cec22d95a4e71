#include "dode/io.hpp"

#include "dode/error.hpp"
#include "dode/util.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

namespace dode {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

std::string read_text(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw FileError("cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad())
        throw FileError("cannot read '" + path.string() + "'");
    return ss.str();
}

void write_text(const fs::path& path, const std::string& text)
{
    std::error_code ec;
    if (path.has_parent_path())
        fs::create_directories(path.parent_path(), ec);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw FileError("cannot write '" + path.string() + "'");
    out << text;
    if (!out)
        throw FileError("failed while writing '" + path.string() + "'");
}

namespace {

std::vector<std::string> split(std::string_view line, char sep)
{
    std::vector<std::string> out;
    std::size_t start = 0;
    for (;;) {
        const auto pos = line.find(sep, start);
        out.emplace_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos)
            break;
        start = pos + 1;
    }
    return out;
}

std::string trim(std::string_view s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos)
        return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::size_t parse_index(std::string_view text, std::string_view what)
{
    std::size_t v = 0;
    auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || p != text.data() + text.size())
        throw ParseError("invalid " + std::string(what) + " '" + std::string(text) + "'");
    return v;
}

std::string where(std::string_view source, std::size_t line)
{
    return std::string(source) + ":" + std::to_string(line) + ": ";
}

/// Per-row helper for CSV readers: wraps field parsing errors with file and line.
class RowReader {
public:
    RowReader(const CsvTable& table, std::string_view source) : table_(table), source_(source) {}

    template <class F>
    void each(F&& f) const
    {
        for (std::size_t i = 0; i < table_.rows.size(); ++i) {
            try {
                f(table_.rows[i]);
            } catch (const ParseError& e) {
                throw ParseError(std::string(source_) + ": data row " + std::to_string(i + 1) + ": " + e.what());
            }
        }
    }

private:
    const CsvTable& table_;
    std::string_view source_;
};

std::map<Date, std::size_t> day_lookup(const TimeGrid& grid)
{
    std::map<Date, std::size_t> out;
    for (std::size_t d = 0; d < grid.day_count(); ++d)
        out.emplace(grid.days()[d], d);
    return out;
}

std::optional<std::size_t> grid_interval(const TimeGrid& grid, const std::map<Date, std::size_t>& days,
                                         const Date& date, std::size_t minute)
{
    auto it = days.find(date);
    const auto dt = static_cast<std::size_t>(grid.interval_minutes());
    if (it == days.end() || minute >= 1440 || minute % dt != 0)
        return std::nullopt;
    return grid.first_interval_of_day(it->second) + minute / dt;
}

std::string minute_of(const TimeGrid& grid, std::size_t t)
{
    return std::to_string((t % grid.intervals_per_day()) * static_cast<std::size_t>(grid.interval_minutes()));
}

std::string join_days(const std::vector<Date>& days)
{
    std::string out;
    for (std::size_t i = 0; i < days.size(); ++i) {
        if (i)
            out += ';';
        out += format_date(days[i]);
    }
    return out;
}

} // namespace

std::optional<std::size_t> CsvTable::find_column(std::string_view name) const
{
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end())
        return std::nullopt;
    return static_cast<std::size_t>(it - header.begin());
}

std::size_t CsvTable::column(std::string_view name, std::string_view source) const
{
    if (auto c = find_column(name))
        return *c;
    throw ParseError(std::string(source) + ": missing column '" + std::string(name) + "'");
}

CsvTable parse_csv(std::string_view text, std::string_view source)
{
    CsvTable t;
    std::size_t line_no = 0;
    std::size_t start = 0;
    bool have_header = false;
    while (start <= text.size()) {
        auto end = text.find('\n', start);
        if (end == std::string_view::npos)
            end = text.size();
        ++line_no;
        std::string_view line = text.substr(start, end - start);
        if (!line.empty() && line.back() == '\r')
            line.remove_suffix(1);
        start = end + 1;
        if (trim(line).empty())
            continue;
        if (line.front() == '#') {
            t.comments.push_back(trim(line.substr(1)));
            continue;
        }
        auto fields = split(line, ',');
        for (auto& f : fields)
            f = trim(f);
        if (!have_header) {
            t.header = std::move(fields);
            have_header = true;
            continue;
        }
        if (fields.size() != t.header.size())
            throw ParseError(where(source, line_no) + "expected " + std::to_string(t.header.size())
                             + " fields, found " + std::to_string(fields.size()));
        t.rows.push_back(std::move(fields));
    }
    if (!have_header)
        throw ParseError(std::string(source) + ": no header row");
    return t;
}

TrafficNetwork parse_network_json(std::string_view text, std::string_view source)
{
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw ParseError(std::string(source) + ": " + e.what());
    }
    try {
        std::vector<Node> nodes;
        std::vector<Link> links;
        std::vector<Region> regions;
        std::unordered_map<std::string, LatLon> sensors;
        for (const auto& n : doc.at("nodes")) {
            Node node{n.at("id").get<std::string>(), {n.at("lat").get<double>(), n.at("lon").get<double>()}, {}};
            if (n.contains("region") && !n["region"].is_null())
                node.region_id = n["region"].get<std::string>();
            nodes.push_back(std::move(node));
        }
        std::unordered_map<std::string, LatLon> positions;
        for (const auto& n : nodes)
            positions.emplace(n.id, n.position);
        for (const auto& l : doc.at("links")) {
            Link link;
            link.id = l.at("id").get<std::string>();
            link.from_node = l.at("from").get<std::string>();
            link.to_node = l.at("to").get<std::string>();
            if (l.contains("length_km")) {
                link.length_km = l["length_km"].get<double>();
            } else {
                auto a = positions.find(link.from_node), b = positions.find(link.to_node);
                if (a != positions.end() && b != positions.end())
                    link.length_km = haversine_km(a->second, b->second);
            }
            if (l.contains("sensors"))
                link.sensor_ids = l["sensors"].get<std::vector<std::string>>();
            links.push_back(std::move(link));
        }
        if (doc.contains("regions")) {
            for (const auto& r : doc["regions"]) {
                Region region{r.at("id").get<std::string>(), {}, {}};
                region.name = r.contains("name") ? r["name"].get<std::string>() : region.id;
                if (r.contains("nodes"))
                    region.node_ids = r["nodes"].get<std::vector<std::string>>();
                regions.push_back(std::move(region));
            }
        }
        if (doc.contains("sensors")) {
            for (const auto& s : doc["sensors"])
                sensors.emplace(s.at("id").get<std::string>(), LatLon{s.at("lat").get<double>(), s.at("lon").get<double>()});
        }
        return build_network(std::move(nodes), std::move(links), std::move(regions), std::move(sensors));
    } catch (const json::exception& e) {
        throw ParseError(std::string(source) + ": " + e.what());
    }
}

TrafficNetwork read_network(const fs::path& path)
{
    return parse_network_json(read_text(path), path.string());
}

std::string network_to_json(const TrafficNetwork& network)
{
    ordered_json doc;
    doc["nodes"] = ordered_json::array();
    for (const auto& n : network.nodes()) {
        ordered_json j;
        j["id"] = n.id;
        j["lat"] = n.position.lat;
        j["lon"] = n.position.lon;
        if (!n.region_id.empty())
            j["region"] = n.region_id;
        doc["nodes"].push_back(std::move(j));
    }
    doc["links"] = ordered_json::array();
    for (const auto& l : network.links()) {
        ordered_json j;
        j["id"] = l.id;
        j["from"] = l.from_node;
        j["to"] = l.to_node;
        j["length_km"] = l.length_km;
        j["sensors"] = l.sensor_ids;
        doc["links"].push_back(std::move(j));
    }
    doc["regions"] = ordered_json::array();
    for (const auto& r : network.regions()) {
        ordered_json j;
        j["id"] = r.id;
        j["name"] = r.name;
        doc["regions"].push_back(std::move(j));
    }
    if (!network.sensor_positions().empty()) {
        std::map<std::string, LatLon> sorted(network.sensor_positions().begin(), network.sensor_positions().end());
        doc["sensors"] = ordered_json::array();
        for (const auto& [id, p] : sorted)
            doc["sensors"].push_back({{"id", id}, {"lat", p.lat}, {"lon", p.lon}});
    }
    return doc.dump(2) + "\n";
}

SensorReadResult parse_sensor_csv(std::string_view text, const TimeGrid& grid, std::string_view source)
{
    const auto t = parse_csv(text, source);
    const auto c_id = t.column("sensor_id", source), c_date = t.column("date", source),
               c_min = t.column("minute", source), c_flow = t.column("flow_vehicles", source),
               c_speed = t.column("speed_kmh", source);
    const auto days = day_lookup(grid);
    SensorReadResult out;
    RowReader(t, source).each([&](const std::vector<std::string>& row) {
        const auto date = parse_date(row[c_date]);
        const auto minute = parse_index(row[c_min], "minute");
        const auto interval = grid_interval(grid, days, date, minute);
        if (!interval) {
            ++out.outside_grid;
            return;
        }
        SensorRecord r{row[c_id], *interval, std::nullopt, std::nullopt};
        if (!row[c_flow].empty())
            r.flow = parse_double(row[c_flow], "flow_vehicles");
        if (!row[c_speed].empty())
            r.speed = parse_double(row[c_speed], "speed_kmh");
        out.records.push_back(std::move(r));
    });
    return out;
}

std::string sensor_records_to_csv(std::span<const SensorRecord> records, const TimeGrid& grid)
{
    std::string out = "sensor_id,date,minute,flow_vehicles,speed_kmh\n";
    for (const auto& r : records) {
        out += r.sensor_id + ',' + format_date(grid.days()[grid.day_of(r.interval)]) + ',' + minute_of(grid, r.interval)
            + ',' + (r.flow ? format_double(*r.flow) : "") + ',' + (r.speed ? format_double(*r.speed) : "") + '\n';
    }
    return out;
}

std::vector<ArterialSensor> parse_arterial_csv(std::string_view text, const TimeGrid& grid, std::string_view source)
{
    const auto t = parse_csv(text, source);
    const auto c_id = t.column("sensor_id", source), c_lat = t.column("lat", source), c_lon = t.column("lon", source),
               c_date = t.column("date", source), c_min = t.column("minute", source),
               c_flow = t.column("flow_vehicles", source);
    const auto days = day_lookup(grid);
    struct Partial {
        LatLon position;
        std::vector<MaybeValue> flow;
    };
    std::map<std::string, Partial> by_id;
    RowReader(t, source).each([&](const std::vector<std::string>& row) {
        const auto date = parse_date(row[c_date]);
        const auto interval = grid_interval(grid, days, date, parse_index(row[c_min], "minute"));
        auto [it, inserted] = by_id.try_emplace(row[c_id]);
        if (inserted) {
            it->second.position = {parse_double(row[c_lat], "lat"), parse_double(row[c_lon], "lon")};
            it->second.flow.assign(grid.interval_count(), std::nullopt);
        }
        if (interval && !row[c_flow].empty()) {
            const double f = parse_double(row[c_flow], "flow_vehicles");
            if (f >= 0.0)
                it->second.flow[*interval] = f;
        }
    });
    std::vector<ArterialSensor> out;
    for (auto& [id, p] : by_id) {
        if (!valid_position(p.position))
            throw ParseError(std::string(source) + ": arterial sensor '" + id + "' has an invalid position");
        try {
            out.push_back({id, p.position, interpolate_missing(p.flow)});
        } catch (const AllMissing&) {
            throw AllMissing("arterial sensor '" + id + "' has no valid flow on the grid");
        }
    }
    return out;
}

std::string arterials_to_csv(std::span<const ArterialSensor> arterials, const TimeGrid& grid)
{
    std::string out = "sensor_id,lat,lon,date,minute,flow_vehicles\n";
    for (const auto& a : arterials) {
        const auto lat = format_double(a.position.lat), lon = format_double(a.position.lon);
        for (std::size_t t = 0; t < a.flow.size(); ++t) {
            out += a.sensor_id + ',' + lat + ',' + lon + ',' + format_date(grid.days()[grid.day_of(t)]) + ','
                + minute_of(grid, t) + ',' + format_double(a.flow[t]) + '\n';
        }
    }
    return out;
}

std::string estimate_to_csv(const TrafficNetwork& network, std::span<const OdPair> od_pairs, const TimeGrid& grid,
                            std::span<const double> x, const std::string& stage, const ErrorReport* report)
{
    const VariableIndex index(od_pairs, network.node_count(), grid.interval_count());
    if (x.size() < index.q_count())
        throw DimensionMismatch("estimate is shorter than the q block");
    std::string out = "# dode estimate\n";
    out += "# stage," + stage + "\n";
    out += "# interval_minutes," + std::to_string(grid.interval_minutes()) + "\n";
    out += "# days," + join_days(grid.days()) + "\n";
    out += "# network_digest," + network.digest() + "\n";
    out += "origin,destination,path,interval,value_vehicles\n";
    for (std::size_t od = 0; od < od_pairs.size(); ++od) {
        const auto& o = network.nodes()[od_pairs[od].origin].id;
        const auto& d = network.nodes()[od_pairs[od].destination].id;
        for (std::size_t k = 0; k < index.path_count(od); ++k) {
            const auto prefix = o + ',' + d + ',' + std::to_string(k) + ',';
            for (std::size_t t = 0; t < grid.interval_count(); ++t)
                out += prefix + std::to_string(t) + ',' + format_double(x[index.q_column(od, k, t)]) + '\n';
        }
    }
    if (report) {
        out += "#report,epsilon_b," + format_double(report->eps_b) + "\n";
        out += "#report,epsilon_s," + format_double(report->eps_s) + "\n";
        out += "#report,epsilon_lb," + format_double(report->eps_lb) + "\n";
        out += "#report,epsilon_tau," + format_double(report->eps_tau) + "\n";
        out += "#report,objective," + format_double(report->objective) + "\n";
        out += "#report,total_flow_vehicles," + format_double(report->total_flow) + "\n";
        out += "#report,epochs," + std::to_string(report->epochs_run) + "\n";
        out += std::string("#report,converged,") + (report->converged ? "true" : "false") + "\n";
    }
    return out;
}

EstimateFile parse_estimate_csv(std::string_view text, std::string_view source)
{
    const auto t = parse_csv(text, source);
    EstimateFile f;
    bool have_grid = false;
    for (const auto& c : t.comments) {
        const auto comma = c.find(',');
        if (comma == std::string::npos)
            continue;
        const auto key = c.substr(0, comma), value = c.substr(comma + 1);
        if (key == "stage") {
            f.stage = value;
        } else if (key == "interval_minutes") {
            f.interval_minutes = static_cast<int>(parse_index(value, "interval_minutes"));
        } else if (key == "days") {
            for (const auto& d : split(value, ';'))
                f.days.push_back(parse_date(d));
            have_grid = true;
        } else if (key == "network_digest") {
            f.network_digest = value;
        } else if (key == "report") {
            const auto rest = split(value, ',');
            if (rest.size() == 2)
                f.report.emplace_back(rest[0], rest[1]);
        }
    }
    if (!have_grid)
        throw ParseError(std::string(source) + ": missing '# days' header");
    const auto c_o = t.column("origin", source), c_d = t.column("destination", source), c_p = t.column("path", source),
               c_t = t.column("interval", source), c_v = t.column("value_vehicles", source);
    RowReader(t, source).each([&](const std::vector<std::string>& row) {
        f.origin.push_back(row[c_o]);
        f.destination.push_back(row[c_d]);
        f.path.push_back(parse_index(row[c_p], "path"));
        f.interval.push_back(parse_index(row[c_t], "interval"));
        f.value.push_back(parse_double(row[c_v], "value_vehicles"));
    });
    return f;
}

std::vector<double> estimate_q(const EstimateFile& file, const TrafficNetwork& network,
                               std::span<const OdPair> od_pairs)
{
    const auto grid = file.grid();
    const VariableIndex index(od_pairs, network.node_count(), grid.interval_count());
    std::map<std::pair<std::size_t, std::size_t>, std::size_t> od_of;
    for (std::size_t i = 0; i < od_pairs.size(); ++i)
        od_of[{od_pairs[i].origin, od_pairs[i].destination}] = i;
    std::vector<double> q(index.q_count(), 0.0);
    for (std::size_t r = 0; r < file.value.size(); ++r) {
        const auto o = network.find_node(file.origin[r]);
        const auto d = network.find_node(file.destination[r]);
        if (!o || !d)
            throw ParseError("estimate row " + std::to_string(r + 1) + " names an unknown node");
        auto it = od_of.find({*o, *d});
        if (it == od_of.end() || file.path[r] >= index.path_count(it->second)
            || file.interval[r] >= index.intervals())
            throw ParseError("estimate row " + std::to_string(r + 1) + " does not match the retained paths");
        q[index.q_column(it->second, file.path[r], file.interval[r])] = file.value[r];
    }
    return q;
}

RegionFlowMatrix estimate_region_flows(const EstimateFile& file, const TrafficNetwork& network)
{
    const auto grid = file.grid();
    RegionFlowMatrix out(grid.day_count(), network.regions().size());
    for (std::size_t r = 0; r < file.value.size(); ++r) {
        const auto o = network.find_node(file.origin[r]);
        const auto d = network.find_node(file.destination[r]);
        if (!o || !d)
            throw ParseError("estimate row " + std::to_string(r + 1) + " names a node that is not in the network");
        const auto ro = network.region_of(*o), rd = network.region_of(*d);
        if (!ro || !rd)
            throw UnassignedNode("estimate row " + std::to_string(r + 1) + " touches a node without a region");
        if (file.interval[r] >= grid.interval_count())
            throw ParseError("estimate row " + std::to_string(r + 1) + " lies outside the grid");
        out(grid.day_of(file.interval[r]), *ro, *rd) += file.value[r];
    }
    return out;
}

std::string error_report_csv(const std::vector<std::pair<std::string, ErrorReport>>& stages)
{
    std::string out = "stage,epsilon_b,epsilon_s,epsilon_lb,epsilon_tau,objective,total_flow_vehicles,epochs,converged\n";
    for (const auto& [name, r] : stages) {
        out += name + ',' + format_double(r.eps_b) + ',' + format_double(r.eps_s) + ',' + format_double(r.eps_lb) + ','
            + format_double(r.eps_tau) + ',' + format_double(r.objective) + ',' + format_double(r.total_flow) + ','
            + std::to_string(r.epochs_run) + ',' + (r.converged ? "true" : "false") + '\n';
    }
    return out;
}

std::string sweep_csv(std::span<const SweepRow> rows)
{
    std::string out = "beta,eta,gamma,epsilon_b,epsilon_s,epsilon_lb,epsilon_tau,total_flow_vehicles\n";
    for (const auto& row : rows) {
        const auto& r = row.report;
        out += format_double(row.weights.beta) + ',' + format_double(row.weights.eta) + ','
            + format_double(row.weights.gamma) + ',' + format_double(r.eps_b) + ',' + format_double(r.eps_s) + ','
            + format_double(r.eps_lb) + ',' + format_double(r.eps_tau) + ',' + format_double(r.total_flow) + '\n';
    }
    return out;
}

std::vector<ZipcodeRow> parse_income_csv(std::string_view text, std::string_view source)
{
    const auto t = parse_csv(text, source);
    const auto c_zip = t.column("zipcode", source), c_inc = t.column("income", source),
               c_pop = t.column("population", source), c_dist = t.column("district", source),
               c_ov = t.column("overlap_fraction", source);
    std::vector<ZipcodeRow> out;
    RowReader(t, source).each([&](const std::vector<std::string>& row) {
        out.push_back({row[c_zip], parse_double(row[c_inc], "income"), parse_double(row[c_pop], "population"),
                       row[c_dist], parse_double(row[c_ov], "overlap_fraction")});
    });
    return out;
}

namespace {

class TokenStream {
public:
    TokenStream(std::string_view text, std::string_view source) : text_(text), source_(source) {}

    std::string_view next()
    {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_])))
            ++pos_;
        if (pos_ >= text_.size())
            throw ParseError(std::string(source_) + ": unexpected end of input");
        const auto start = pos_;
        while (pos_ < text_.size() && !std::isspace(static_cast<unsigned char>(text_[pos_])))
            ++pos_;
        return text_.substr(start, pos_ - start);
    }

    void expect(std::string_view word)
    {
        const auto w = next();
        if (w != word)
            throw ParseError(std::string(source_) + ": expected '" + std::string(word) + "', found '" + std::string(w)
                             + "'");
    }

    std::size_t index() { return parse_index(next(), "count"); }
    double number() { return parse_double(next(), source_); }

private:
    std::string_view text_;
    std::string_view source_;
    std::size_t pos_ = 0;
};

void block_to_text(std::string& out, const SparseBlock& b)
{
    out += "block " + b.name() + ' ' + std::to_string(b.rows()) + ' ' + std::to_string(b.cols()) + ' '
        + std::to_string(b.nnz()) + ' ' + format_double(b.weight()) + '\n';
    for (double v : b.target())
        out += "b " + format_double(v) + '\n';
    for (const auto& t : b.triplets())
        out += "a " + std::to_string(t.row) + ' ' + std::to_string(t.col) + ' ' + format_double(t.value) + '\n';
}

SparseBlock block_from_text(TokenStream& in, std::string_view expected_name)
{
    in.expect("block");
    in.expect(expected_name);
    const auto rows = in.index(), cols = in.index(), nnz = in.index();
    const double weight = in.number();
    std::vector<double> target(rows);
    for (auto& v : target) {
        in.expect("b");
        v = in.number();
    }
    std::vector<Triplet> entries(nnz);
    for (auto& e : entries) {
        in.expect("a");
        e.row = in.index();
        e.col = in.index();
        e.value = in.number();
    }
    return SparseBlock(std::string(expected_name), rows, cols, std::move(entries), std::move(target), weight);
}

} // namespace

std::string problem_to_text(const DodeProblem& p)
{
    std::string out = "dode-problem 1\n";
    out += "index " + std::to_string(p.index.od_count()) + ' ' + std::to_string(p.index.node_count()) + ' '
        + std::to_string(p.index.intervals()) + '\n';
    out += "paths";
    for (auto k : p.index.paths_per_od())
        out += ' ' + std::to_string(k);
    out += '\n';
    out += "intervals_per_day " + std::to_string(p.intervals_per_day) + '\n';
    out += "network_digest " + (p.network_digest.empty() ? std::string("-") : p.network_digest) + '\n';
    for (const auto* b : p.blocks())
        block_to_text(out, *b);
    out += "end\n";
    return out;
}

DodeProblem parse_problem_text(std::string_view text, std::string_view source)
{
    TokenStream in(text, source);
    in.expect("dode-problem");
    in.expect("1");
    in.expect("index");
    const auto ods = in.index(), nodes = in.index(), intervals = in.index();
    in.expect("paths");
    std::vector<std::size_t> paths(ods);
    for (auto& k : paths)
        k = in.index();
    DodeProblem p;
    p.index = VariableIndex(std::move(paths), nodes, intervals);
    in.expect("intervals_per_day");
    p.intervals_per_day = in.index();
    in.expect("network_digest");
    const auto digest = in.next();
    p.network_digest = digest == "-" ? std::string() : std::string(digest);
    p.base = block_from_text(in, "base");
    p.lower_bound = block_from_text(in, "lower_bound");
    p.symmetry = block_from_text(in, "symmetry");
    p.total_flow = block_from_text(in, "total_flow");
    in.expect("end");
    p.validate();
    return p;
}

std::string dar_to_text(const DarTensor& dar, const std::string& key)
{
    std::string out = "dode-dar 1\nkey " + key + "\nshape " + std::to_string(dar.od_count()) + ' '
        + std::to_string(dar.intervals()) + ' ' + std::to_string(dar.entries().size()) + '\n';
    for (const auto& e : dar.entries()) {
        out += std::to_string(e.od) + ' ' + std::to_string(e.path) + ' ' + std::to_string(e.t_prime) + ' '
            + std::to_string(e.link) + ' ' + std::to_string(e.t) + ' ' + format_double(e.ratio) + '\n';
    }
    return out;
}

std::optional<DarTensor> parse_dar_text(std::string_view text, const std::string& key, std::string_view source)
{
    TokenStream in(text, source);
    in.expect("dode-dar");
    in.expect("1");
    in.expect("key");
    if (in.next() != key)
        return std::nullopt;
    in.expect("shape");
    const auto ods = in.index(), intervals = in.index(), count = in.index();
    std::vector<DarEntry> entries(count);
    for (auto& e : entries) {
        e.od = static_cast<std::uint32_t>(in.index());
        e.path = static_cast<std::uint32_t>(in.index());
        e.t_prime = static_cast<std::uint32_t>(in.index());
        e.link = static_cast<std::uint32_t>(in.index());
        e.t = static_cast<std::uint32_t>(in.index());
        e.ratio = in.number();
    }
    return DarTensor(ods, intervals, std::move(entries));
}

std::string change_summary_csv(std::span<const ChangeSummary> summary, const IntervalScheme& scheme)
{
    std::string out = "interval,start,end,increased,sig_increased,decreased,sig_decreased,excluded,total\n";
    for (const auto& s : summary) {
        std::string start = "-", end = "-";
        if (s.interval < scheme.intervals.size()) {
            start = format_date(scheme.intervals[s.interval].first);
            end = format_date(scheme.intervals[s.interval].last);
        }
        out += std::to_string(s.interval + 1) + ',' + start + ',' + end + ',' + std::to_string(s.increased) + ','
            + std::to_string(s.sig_increased) + ',' + std::to_string(s.decreased) + ','
            + std::to_string(s.sig_decreased) + ',' + std::to_string(s.excluded) + ',' + std::to_string(s.total)
            + '\n';
    }
    return out;
}

std::string change_records_csv(std::span<const OdChangeRecord> records, const TrafficNetwork& network,
                               const std::vector<IncomeExtrema>* incomes)
{
    std::string out = "origin_region,destination_region,interval,mean_reference_vehicles,mean_comparison_vehicles,"
                      "change_fraction,t_statistic,p_value,classification";
    if (incomes)
        out += ",min_income_usd,max_income_usd";
    out += '\n';
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& r = records[i];
        out += network.regions()[r.origin_region].id + ',' + network.regions()[r.destination_region].id + ','
            + std::to_string(r.interval + 1) + ',' + format_double(r.mean_reference) + ','
            + format_double(r.mean_comparison) + ',' + format_double(r.change) + ',' + format_double(r.t_statistic)
            + ',' + format_double(r.p_value) + ',' + to_string(r.classification);
        if (incomes)
            out += ',' + format_double((*incomes)[i].min_income) + ',' + format_double((*incomes)[i].max_income);
        out += '\n';
    }
    return out;
}

std::string kde_csv(const KdeResult& kde)
{
    std::string out = "# bandwidth," + format_double(kde.bandwidth) + "\n";
    out += "# area_below," + format_double(kde.area_below) + "\n";
    out += "# area_above," + format_double(kde.area_above) + "\n";
    out += "x,density\n";
    for (std::size_t i = 0; i < kde.x.size(); ++i)
        out += format_double(kde.x[i]) + ',' + format_double(kde.density[i]) + '\n';
    return out;
}

} // namespace dode
