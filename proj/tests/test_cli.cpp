#include <catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "rydroute/cli.hpp"

using namespace rydroute;

namespace {

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result invoke(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

std::filesystem::path temp_file(const std::string& name, const std::string& content) {
    const auto p = std::filesystem::temp_directory_path() / ("rydroute_test_" + name);
    std::ofstream(p) << content;
    return p;
}

}  // namespace

TEST_CASE("levels prints case rows and transitions", "[cli]") {
    auto r = invoke({"levels", "--case", "7"});
    REQUIRE(r.code == 0);
    CHECK_THAT(r.out, Catch::Matchers::ContainsSubstring("7,6P3/2,6P3/2,852.3473,509.0452"));
    r = invoke({"levels", "--transition", "6S1/2", "6P1/2"});
    REQUIRE(r.code == 0);
    CHECK_THAT(r.out, Catch::Matchers::ContainsSubstring("894.5930"));
}

TEST_CASE("unreadable data file exits 2 naming the path", "[cli]") {
    const auto r = invoke({"levels", "--data", "/no/such/file.dat"});
    CHECK(r.code == cli::config_error);
    CHECK_THAT(r.err, Catch::Matchers::ContainsSubstring("/no/such/file.dat"));
}

TEST_CASE("usage errors exit 2", "[cli]") {
    CHECK(invoke({}).code == cli::config_error);
    CHECK(invoke({"angles", "--case", "9"}).code == cli::config_error);
    CHECK(invoke({"angles", "--format", "xml"}).code == cli::config_error);
    CHECK(invoke({"bogus"}).code == cli::config_error);
    CHECK(invoke({"--help"}).code == 0);
}

TEST_CASE("angles for one case", "[cli]") {
    auto r = invoke({"angles", "--case", "4"});
    REQUIRE(r.code == 0);
    CHECK_THAT(r.out, Catch::Matchers::ContainsSubstring("4,1.2150,2.0415,0.5612,true"));
    r = invoke({"angles", "--case", "4", "--degrees"});
    CHECK_THAT(r.out, Catch::Matchers::ContainsSubstring("theta1_deg"));
    CHECK_THAT(r.out, Catch::Matchers::ContainsSubstring("116.9"));
}

TEST_CASE("infeasible geometry exits 3 with the defect", "[cli]") {
    const auto r = invoke({"angles", "--lambda5", "400", "--case", "4"});
    CHECK(r.code == cli::infeasible);
    CHECK_THAT(r.err, Catch::Matchers::ContainsSubstring("defect"));
    CHECK(invoke({"router", "--lambda5", "400"}).code == cli::infeasible);
}

TEST_CASE("router fan-out rows", "[cli]") {
    const auto r = invoke({"router", "--case", "4", "-N", "6", "--format", "json"});
    REQUIRE(r.code == 0);
    const auto j = nlohmann::json::parse(r.out);
    REQUIRE(j["fanout"].size() == 6);
    CHECK(j["theta1_rad"].get<double>() == Catch::Approx(2.0415));
}

TEST_CASE("plan reports timing or exits 4", "[cli]") {
    auto r = invoke({"plan", "--case", "7", "--ts", "7"});
    REQUIRE(r.code == 0);
    CHECK_THAT(r.out, Catch::Matchers::ContainsSubstring("5.306360"));
    r = invoke({"plan", "--case", "7", "--ts", "0.2"});
    CHECK(r.code == cli::timing_violation);
    CHECK_THAT(r.err, Catch::Matchers::ContainsSubstring("0.355720"));
    r = invoke({"plan", "--ts", "7", "--omega3", "28"});
    CHECK(r.code == cli::config_error);
}

TEST_CASE("simulate is reproducible across thread counts", "[cli]") {
    const std::vector<std::string> base{"simulate", "--set", "atoms=300", "--set", "repetitions=4", "--set", "points=6"};
    auto a = invoke(base);
    auto args = base;
    args.insert(args.end(), {"--threads", "3"});
    const auto b = invoke(args);
    REQUIRE(a.code == 0);
    CHECK(a.out == b.out);
    CHECK(a.out == invoke(base).out);
    args = base;
    args.insert(args.end(), {"--seed", "2", "--set", "protocol=off"});
    CHECK(invoke(args).out != a.out);
}

TEST_CASE("simulate JSON writes null for skipped points", "[cli]") {
    const auto r = invoke({"simulate", "--set", "atoms=100", "--set", "repetitions=2", "--set", "points=3",
                           "--format", "json"});
    REQUIRE(r.code == 0);
    const auto j = nlohmann::json::parse(r.out);
    CHECK(j["points"][0]["efficiency"].is_null());
    CHECK(j["points"][0]["note"] == "below_min_storage");
}

TEST_CASE("simulate rejects bad configuration", "[cli]") {
    CHECK(invoke({"simulate", "--set", "temperature=5"}).code == cli::config_error);
    CHECK(invoke({"simulate", "--config", "/no/such.cfg"}).code == cli::config_error);
    const auto cfg = temp_file("bad.cfg", "atoms = 10\nfrobnicate = 3\n");
    const auto r = invoke({"simulate", "--config", cfg.string()});
    CHECK(r.code == cli::config_error);
    CHECK_THAT(r.err, Catch::Matchers::ContainsSubstring(":2:"));
}

TEST_CASE("fit reads sweep output and skips NaN rows", "[cli]") {
    std::string csv = "t_us,efficiency,stderr,note\n0,nan,nan,below_min_storage\n";
    for (int i = 1; i <= 15; ++i) {
        const double t = 0.5 * i;
        csv += cli::detail::num(t) + "," + cli::detail::num(std::exp(-(t / 3.11) * (t / 3.11))) + ",0.01,\n";
    }
    const auto path = temp_file("decay.csv", csv);
    auto r = invoke({"fit", "--input", path.string(), "--model", "gaussian"});
    REQUIRE(r.code == 0);
    CHECK_THAT(r.out, Catch::Matchers::ContainsSubstring("tau_us,3.11"));

    const auto flat = temp_file("flat.csv", "t_us,efficiency\n0,0.5\n1,0.5\n2,0.5\n3,0.5\n4,0.5\n");
    r = invoke({"fit", "--input", flat.string()});
    CHECK(r.code == cli::fit_failed);
    CHECK_THAT(r.err, Catch::Matchers::ContainsSubstring("degenerate"));

    CHECK(invoke({"fit", "--input", flat.string(), "--weights", "stderr"}).code == cli::config_error);
}
