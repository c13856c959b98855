#include "gmlattice/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "gmlattice/errors.hpp"

namespace gml::io {

namespace {

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream is(line);
    while (std::getline(is, field, sep)) out.push_back(field);
    if (!line.empty() && line.back() == sep) out.emplace_back();
    return out;
}

double parse_double(const std::string& s) {
    std::size_t pos = 0;
    double x = 0.0;
    try {
        x = std::stod(s, &pos);
    } catch (const std::exception&) {
        throw InvalidInput("not a number: '" + s + "'");
    }
    while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
    if (pos != s.size()) throw InvalidInput("trailing characters in number: '" + s + "'");
    return x;
}

}  // namespace

std::string format_double(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

void write_lattice_csv(std::ostream& os, const LatticeState& state) {
    os << "node,u,v\n";
    for (int k = 0; k < state.size(); ++k)
        os << k << ',' << format_double(state.u[k]) << ',' << format_double(state.v[k]) << '\n';
}

LatticeState read_lattice_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw InvalidInput("empty lattice CSV");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "node,u,v") throw InvalidInput("lattice CSV header must be 'node,u,v'");
    LatticeState s;
    int expected = 0;
    while (std::getline(is, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto f = split(line, ',');
        if (f.size() != 3) throw InvalidInput("lattice CSV row needs 3 fields: '" + line + "'");
        if (static_cast<int>(parse_double(f[0])) != expected)
            throw InvalidInput("lattice CSV nodes must be 0, 1, 2, ... in order");
        s.u.push_back(parse_double(f[1]));
        s.v.push_back(parse_double(f[2]));
        ++expected;
    }
    s.validate();
    return s;
}

json lattice_to_json(const LatticeState& state) {
    return json{{"n", state.size()}, {"u", state.u}, {"v", state.v}};
}

LatticeState lattice_from_json(const json& j) {
    if (!j.is_object()) throw InvalidInput("lattice JSON must be an object");
    for (const auto& [key, _] : j.items()) {
        if (key != "n" && key != "u" && key != "v") throw InvalidInput("unknown lattice JSON key '" + key + "'");
    }
    LatticeState s;
    try {
        s.u = j.at("u").get<std::vector<double>>();
        s.v = j.at("v").get<std::vector<double>>();
        if (j.contains("n") && j.at("n").get<int>() != static_cast<int>(s.u.size()))
            throw InvalidInput("lattice JSON 'n' does not match the length of 'u'");
    } catch (const json::exception& e) {
        throw InvalidInput(std::string("malformed lattice JSON: ") + e.what());
    }
    s.validate();
    return s;
}

json spike_config_to_json(const SpikeConfiguration& config) {
    return json{{"K", config.K()},
                {"d", config.d},
                {"positions", config.positions},
                {"heights", config.heights},
                {"residual_norm", config.residual_norm()}};
}

json stability_report_to_json(const StabilityReport& report) {
    std::vector<double> re;
    std::vector<double> im;
    for (const auto& z : report.eigenvalues) {
        re.push_back(z.real());
        im.push_back(z.imag());
    }
    return json{{"eigenvalues_re", re},
                {"eigenvalues_im", im},
                {"max_real", report.max_real},
                {"classification", std::string(to_string(report.classification))}};
}

void write_exact_sweep_csv(std::ostream& os, const std::vector<ExactSweepRow>& rows) {
    os << "n,K,m,Dvc,sqrtDvc_over_m\n";
    for (const auto& r : rows) {
        os << r.n << ',' << r.K << ',' << r.m << ',' << format_double(r.Dvc) << ','
           << format_double(std::sqrt(r.Dvc) / r.m) << '\n';
    }
}

void write_eta_trace_csv(std::ostream& os, const MesaProfile& profile) {
    os << "k,eta,branch\n";
    for (std::size_t k = 0; k < profile.eta.size(); ++k) {
        const int b = k == 0 ? 0 : static_cast<int>(profile.branch[k - 1]);
        os << k + 1 << ',' << format_double(profile.eta[k]) << ',' << b << '\n';
    }
}

void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
    os << "t,node,u,v\n";
    for (std::size_t i = 0; i < traj.states.size(); ++i) {
        const auto& s = traj.states[i];
        const std::string t = format_double(traj.times[i]);
        for (int k = 0; k < s.size(); ++k)
            os << t << ',' << k << ',' << format_double(s.u[k]) << ',' << format_double(s.v[k]) << '\n';
    }
}

void write_trajectory_summary_csv(std::ostream& os, const Trajectory& traj) {
    os << "t,spike_count,max_u,residual_norm\n";
    for (std::size_t i = 0; i < traj.states.size(); ++i) {
        const auto& d = traj.diagnostics[i];
        os << format_double(traj.times[i]) << ',' << count_runs(d.spike_nodes, traj.states[i].size()) << ','
           << format_double(d.max_u) << ',' << format_double(d.residual_norm) << '\n';
    }
}

void write_branch_csv(std::ostream& os, const Branch& branch) {
    os << "param,max_u,stable,fold_flag\n";
    for (const auto& p : branch.points) {
        os << format_double(p.parameter) << ',' << format_double(p.max_u) << ',' << (p.stable ? 1 : 0) << ','
           << (p.fold ? 1 : 0) << '\n';
    }
}

void write_branch_states(const std::filesystem::path& dir, const Branch& branch) {
    std::filesystem::create_directories(dir);
    for (std::size_t i = 0; i < branch.points.size(); ++i) {
        std::ostringstream name;
        name << "state_" << std::setw(5) << std::setfill('0') << i << ".csv";
        std::ostringstream body;
        write_lattice_csv(body, branch.points[i].state);
        write_file(dir / name.str(), body.str());
    }
}

void write_file(const std::filesystem::path& path, const std::string& contents) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot open '" + tmp.string() + "' for writing");
        out << contents;
        if (!out) throw Error("write to '" + tmp.string() + "' failed");
    }
    std::filesystem::rename(tmp, path);
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidInput("cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace gml::io
