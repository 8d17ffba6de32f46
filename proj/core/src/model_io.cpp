#include "mrlft/model_io.hpp"

#include <fstream>
#include <optional>
#include <sstream>
#include <utility>

#include "json.hpp"

#include "mrlft/errors.hpp"

namespace mrlft {
namespace {

using json = nlohmann::ordered_json;

json mat_to_json(const Eigen::MatrixXd& m) {
    json data = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
    return json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(data)}};
}

Eigen::MatrixXd mat_from_json(const json& j, const std::string& where) {
    if (!j.is_object() || !j.contains("rows") || !j.contains("cols") || !j.contains("data"))
        throw ModelError(where + ": expected {rows, cols, data}");
    const int rows = j.at("rows").get<int>();
    const int cols = j.at("cols").get<int>();
    const auto& data = j.at("data");
    if (rows < 0 || cols < 0 || !data.is_array() ||
        data.size() != static_cast<size_t>(rows) * static_cast<size_t>(cols))
        throw ModelError(where + ": data length does not match rows*cols");
    Eigen::MatrixXd m(rows, cols);
    size_t k = 0;
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) m(r, c) = data[k++].get<double>();
    return m;
}

StateSpaceModel ss_from_json(const json& j, const std::string& where,
                             std::optional<double> ts) {
    StateSpaceModel sys;
    sys.A = mat_from_json(j.at("A"), where + ".A");
    sys.B = mat_from_json(j.at("B"), where + ".B");
    sys.C = mat_from_json(j.at("C"), where + ".C");
    sys.D = mat_from_json(j.at("D"), where + ".D");
    sys.Ts = ts;
    return sys;
}

json ss_to_json(const StateSpaceModel& sys) {
    return json{{"A", mat_to_json(sys.A)},
                {"B", mat_to_json(sys.B)},
                {"C", mat_to_json(sys.C)},
                {"D", mat_to_json(sys.D)}};
}

const char* kind_name(BlockKind k) {
    switch (k) {
        case BlockKind::RealRepeatedScalar: return "real-scalar";
        case BlockKind::RealFull: return "real-full";
        case BlockKind::ComplexFull: return "complex-full";
    }
    return "?";
}

// Controllable canonical realization of num(z)/den(z), descending powers.
StateSpaceModel tf_to_ss(const std::vector<double>& num, const std::vector<double>& den,
                         double period, const std::string& where) {
    if (den.empty() || den.front() == 0.0)
        throw ModelError(where + ": denominator needs a nonzero leading coefficient");
    if (num.empty() || num.size() > den.size())
        throw ModelError(where + ": numerator order exceeds denominator order");
    const int n = static_cast<int>(den.size()) - 1;
    std::vector<double> a(n), b(n + 1, 0.0);
    for (int i = 0; i < n; ++i) a[i] = den[i + 1] / den[0];
    const size_t pad = den.size() - num.size();
    for (size_t i = 0; i < num.size(); ++i) b[pad + i] = num[i] / den[0];
    StateSpaceModel sys;
    sys.A = Eigen::MatrixXd::Zero(n, n);
    sys.B = Eigen::MatrixXd::Zero(n, 1);
    sys.C = Eigen::MatrixXd::Zero(1, n);
    sys.D = Eigen::MatrixXd::Constant(1, 1, b[0]);
    if (n > 0) {
        for (int i = 0; i < n; ++i) sys.A(0, i) = -a[i];
        sys.A.bottomLeftCorner(n - 1, n - 1).setIdentity();
        sys.B(0, 0) = 1.0;
        for (int i = 0; i < n; ++i) sys.C(0, i) = b[i + 1] - b[0] * a[i];
    }
    sys.Ts = period;
    return sys;
}

UncertainStateSpace plant_from_json(const json& jp) {
    std::optional<double> ts;
    if (jp.contains("period")) ts = jp.at("period").get<double>();

    ChannelMap ch;
    const json& jch = jp.at("channels");
    ch.n_w = jch.at("disturbances").get<int>();
    ch.n_u = jch.at("commands").get<int>();
    ch.n_z = jch.at("performance").get<int>();
    ch.n_y = jch.at("measurements").get<int>();

    if (jp.contains("lft") && (jp.contains("nominal") || jp.contains("parameters")))
        throw ModelError("plant: 'lft' excludes 'nominal'/'parameters'");
    if (jp.contains("lft")) {
        const json& jl = jp.at("lft");
        std::vector<BlockSpec> blocks;
        for (const json& jb : jl.at("blocks")) {
            BlockSpec b;
            b.name = jb.at("name").get<std::string>();
            b.param = jb.value("param", b.name);
            b.rows = jb.at("rows").get<int>();
            b.cols = jb.at("cols").get<int>();
            const std::string kind = jb.at("kind").get<std::string>();
            if (kind == "real-scalar") {
                if (b.rows != b.cols)
                    throw ModelError("block '" + b.name + "': scalar blocks are square");
                b.kind = BlockKind::RealRepeatedScalar;
            } else if (kind == "real-full") {
                b.kind = BlockKind::RealFull;
            } else if (kind == "complex-full") {
                b.kind = BlockKind::ComplexFull;
            } else {
                throw ModelError("block '" + b.name + "': unknown kind '" + kind + "'");
            }
            blocks.push_back(std::move(b));
        }
        return UncertainStateSpace(ss_from_json(jl, "plant.lft", ts),
                                   BlockStructure(std::move(blocks)), ch);
    }

    const StateSpaceModel nominal = ss_from_json(jp.at("nominal"), "plant.nominal", ts);
    std::vector<std::string> names;
    std::vector<StateSpaceModel> coeffs;
    std::vector<ParameterBox::Param> params;
    if (jp.contains("parameters"))
        for (const json& jq : jp.at("parameters")) {
            ParameterBox::Param prm;
            prm.name = jq.at("name").get<std::string>();
            prm.nominal = jq.at("nominal").get<double>();
            prm.half_range = jq.at("half_range").get<double>();
            if (prm.half_range <= 0.0)
                throw ModelError("parameter '" + prm.name + "': half_range must be positive");
            // Coefficients multiply the physical deviation; scale them onto
            // the normalized delta in [-1, 1].
            auto coeff = [&](const char* key, Eigen::Index r, Eigen::Index c) {
                return jq.contains(key)
                           ? mat_from_json(jq.at(key), "parameter " + prm.name + "." + key)
                           : Eigen::MatrixXd::Zero(r, c).eval();
            };
            StateSpaceModel co;
            co.A = prm.half_range * coeff("A", nominal.A.rows(), nominal.A.cols());
            co.B = prm.half_range * coeff("B", nominal.B.rows(), nominal.B.cols());
            co.C = prm.half_range * coeff("C", nominal.C.rows(), nominal.C.cols());
            co.D = prm.half_range * coeff("D", nominal.D.rows(), nominal.D.cols());
            co.Ts = ts;
            names.push_back(prm.name);
            coeffs.push_back(std::move(co));
            params.push_back(std::move(prm));
        }
    return realize_affine(nominal, names, coeffs, ParameterBox(std::move(params)), ch);
}

}  // namespace

ModelDocument parse_model(const std::string& text) {
    json j;
    try {
        j = json::parse(text, nullptr, true, /*ignore_comments=*/true);
    } catch (const json::parse_error& e) {
        throw ModelError(std::string("model file: ") + e.what());
    }
    try {
        ModelDocument doc;
        doc.plant = plant_from_json(j.at("plant"));

        if (j.contains("controller"))
            for (const json& jl : j.at("controller").at("loops")) {
                LoopSpec loop;
                loop.name = jl.at("name").get<std::string>();
                loop.period = jl.at("period").get<double>();
                loop.y_indices = jl.at("measurements").get<std::vector<int>>();
                if (jl.contains("ss") == jl.contains("tf"))
                    throw ModelError("loop '" + loop.name +
                                     "': provide exactly one of 'ss' and 'tf'");
                if (jl.contains("ss"))
                    loop.controller =
                        ss_from_json(jl.at("ss"), "loop " + loop.name, loop.period);
                else {
                    const json& jt = jl.at("tf");
                    loop.controller = tf_to_ss(jt.at("num").get<std::vector<double>>(),
                                               jt.at("den").get<std::vector<double>>(),
                                               loop.period, "loop " + loop.name);
                }
                doc.controller.loops.push_back(std::move(loop));
            }
        if (j.contains("routing"))
            doc.controller.l_sigma = mat_from_json(j.at("routing"), "routing");
        else
            doc.controller.l_sigma.resize(0, 0);
        if (!doc.controller.loops.empty())
            doc.controller.validate(doc.plant.channels().n_y, doc.plant.channels().n_u);

        if (j.contains("io")) {
            const json& ji = j.at("io");
            auto list = [&](const char* key) {
                return ji.contains(key) ? ji.at(key).get<std::vector<std::string>>()
                                        : std::vector<std::string>{};
            };
            doc.io.disturbances = list("disturbances");
            doc.io.performance = list("performance");
            doc.io.measurements = list("measurements");
            doc.io.commands = list("commands");
        }
        return doc;
    } catch (const json::exception& e) {
        throw ModelError(std::string("model file: ") + e.what());
    }
}

ModelDocument load_model(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ModelError("cannot open model file '" + path + "'");
    std::ostringstream ss;
    ss << f.rdbuf();
    return parse_model(ss.str());
}

void save_model(const ModelDocument& doc, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw ModelError("cannot write model file '" + path + "'");
    f << serialize_model(doc);
}

std::string serialize_model(const ModelDocument& doc) {
    json j;
    const UncertainStateSpace& p = doc.plant;
    json jp;
    jp["states"] = p.states();
    if (p.is_discrete())
        jp["period"] = *p.period();
    else
        jp["continuous"] = true;
    jp["channels"] = json{{"disturbances", p.channels().n_w},
                          {"commands", p.channels().n_u},
                          {"performance", p.channels().n_z},
                          {"measurements", p.channels().n_y}};
    json jblocks = json::array();
    for (const auto& b : p.delta().blocks())
        jblocks.push_back(json{{"name", b.name},
                               {"param", b.param},
                               {"kind", kind_name(b.kind)},
                               {"rows", b.rows},
                               {"cols", b.cols}});
    json jlft = ss_to_json(p.realization());
    jlft["blocks"] = std::move(jblocks);
    jp["lft"] = std::move(jlft);
    j["plant"] = std::move(jp);

    json jloops = json::array();
    for (const auto& loop : doc.controller.loops)
        jloops.push_back(json{{"name", loop.name},
                              {"period", loop.period},
                              {"measurements", loop.y_indices},
                              {"ss", ss_to_json(loop.controller)}});
    j["controller"] = json{{"loops", std::move(jloops)}};
    j["routing"] = mat_to_json(doc.controller.l_sigma);
    j["io"] = json{{"disturbances", doc.io.disturbances},
                   {"performance", doc.io.performance},
                   {"measurements", doc.io.measurements},
                   {"commands", doc.io.commands}};
    return j.dump(2) + "\n";
}

}  // namespace mrlft
