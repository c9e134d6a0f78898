#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <string>

#include "doctest.h"
#include "json.hpp"
#include "opdyn/io.hpp"

namespace {

// Spawns the installed binary; stdout and stderr land in log_path.
int run_cli(const std::string& args, const std::string& log_path = "cli_log.txt") {
    const std::string cmd =
        std::string(OPDYN_CLI_PATH) + " " + args + " > " + log_path + " 2>&1";
    const int rc = std::system(cmd.c_str());
    REQUIRE(rc != -1);
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

}  // namespace

TEST_CASE("help names the exit codes and the thread cap") {
    CHECK(run_cli("--help", "cli_help.txt") == 0);
    const auto text = opdyn::io::read_file("cli_help.txt");
    CHECK(text.find("Exit codes: 0 ok, 2 config error") != std::string::npos);
    CHECK(text.find("OPINION_THREADS") != std::string::npos);
}

TEST_CASE("config problems exit with status 2") {
    CHECK(run_cli("simulate definitely_missing.json") == 2);

    opdyn::io::write_file("cli_broken.json", "{{{");
    CHECK(run_cli("simulate cli_broken.json") == 2);

    opdyn::io::write_file("cli_min.json", "{\"initial_measure\":[[1.0,1.0,1.0]]}");
    CHECK(run_cli("frobnicate cli_min.json") == 2);

    // dt >= t_final is rejected by the integrator's validation.
    opdyn::io::write_file("cli_badsim.json",
                          "{\"initial_measure\":[[1.0,1.0,1.0]],"
                          "\"sim\":{\"t_final\":0.5,\"dt\":1.0}}");
    CHECK(run_cli("simulate cli_badsim.json") == 2);

    // No command or config at all is a usage error.
    CHECK(run_cli("") == 2);
}

TEST_CASE("simulate reproduces the single-atom closed form") {
    opdyn::io::write_file("cli_single.json",
                          "{\"params\":{\"sigma\":1.0,\"p\":2.0},"
                          "\"sim\":{\"t_final\":5.0,\"dt\":0.001,\"snapshot_stride\":500},"
                          "\"initial_measure\":[[0.5,2.0,1.0]]}");
    CHECK(run_cli("simulate cli_single.json --out cli_single_out") == 0);

    const auto table =
        opdyn::io::parse_csv(opdyn::io::read_file("cli_single_out/trajectory.csv"));
    REQUIRE(table.header.size() == 5);
    const auto& last = table.rows.back();
    const double t = last[0], y = last[2];
    CHECK(t == 5.0);
    const double z0 = 0.25, c = 2.0;
    const double z = c * z0 / (z0 + (c - z0) * std::exp(-2.0 * c * t));
    CHECK(std::abs(y - std::sqrt(z)) <= 1e-8);

    const auto side = nlohmann::json::parse(
        opdyn::io::read_file("cli_single_out/trajectory.json"));
    CHECK(side["times"].back().get<double>() == 5.0);
    CHECK(side["energies"].size() == side["times"].size());

    CHECK(run_cli("simulate cli_single.json --out cli_single_cut --t-final 1") == 0);
    const auto cut = nlohmann::json::parse(
        opdyn::io::read_file("cli_single_cut/trajectory.json"));
    CHECK(cut["times"].back().get<double>() == 1.0);
}

TEST_CASE("identical config and seed give identical bytes") {
    opdyn::io::write_file(
        "cli_gen.json",
        "{\"params\":{\"sigma\":1.0,\"p\":2.0},"
        "\"sim\":{\"t_final\":2.0,\"dt\":0.001,\"snapshot_stride\":500},"
        "\"initial_measure\":{\"generate\":{\"seed\":7,\"count\":12,"
        "\"thetas\":[1.6,1.8,2.0],\"y_range\":[0.5,2.5]}}}");
    CHECK(run_cli("simulate cli_gen.json --out cli_gen_a") == 0);
    CHECK(run_cli("simulate cli_gen.json --out cli_gen_b") == 0);
    CHECK(opdyn::io::read_file("cli_gen_a/trajectory.csv") ==
          opdyn::io::read_file("cli_gen_b/trajectory.csv"));
    CHECK(opdyn::io::read_file("cli_gen_a/trajectory.json") ==
          opdyn::io::read_file("cli_gen_b/trajectory.json"));
}

TEST_CASE("steady emits the profile table and metadata") {
    opdyn::io::write_file("cli_steady.json",
                          "{\"params\":{\"p\":2.0},"
                          "\"pi\":[[1.6,0.3],[2.0,0.4],[2.6,0.3]],\"grid_n\":201}");
    CHECK(run_cli("steady cli_steady.json --out cli_steady_out") == 0);

    const auto table = opdyn::io::parse_csv(opdyn::io::read_file("cli_steady_out/profile.csv"));
    CHECK(table.header ==
          std::vector<std::string>({"theta", "g", "g_prime", "g_second"}));
    CHECK(table.rows.size() == 201);

    const auto meta =
        nlohmann::json::parse(opdyn::io::read_file("cli_steady_out/profile.json"));
    CHECK(meta["alpha"].get<double>() > 0.0);
    CHECK(meta["unique_condition"].get<bool>());
    CHECK(meta["alpha_candidates"].size() == 1);
}

TEST_CASE("figure uses the shipped defaults and stays ordered") {
    const std::string cfg = std::string(OPDYN_CONFIG_DIR) + "/figure.json";
    CHECK(run_cli("figure " + cfg + " --out cli_fig_out") == 0);
    const auto table = opdyn::io::parse_csv(opdyn::io::read_file("cli_fig_out/figure.csv"));
    CHECK(table.header == std::vector<std::string>({"alpha", "theta", "g"}));
    REQUIRE(table.rows.size() == 1000);
    for (std::size_t k = 1; k < 100; ++k) {
        CHECK(table.rows[k][0] == table.rows[0][0]);
        CHECK(table.rows[k][2] > table.rows[k - 1][2]);
    }
}

TEST_CASE("rates reports a passing decay study") {
    opdyn::io::write_file("cli_rates.json",
                          "{\"params\":{\"sigma\":1.0,\"p\":2.0},"
                          "\"sim\":{\"t_final\":25.0,\"dt\":0.001,\"snapshot_stride\":1000},"
                          "\"initial_measure\":[[0.7,1.6,0.25],[1.3,1.6,0.25],"
                          "[0.9,2.0,0.25],[1.8,2.0,0.25]]}");
    CHECK(run_cli("rates cli_rates.json --out cli_rates_out") == 0);
    const auto rep =
        nlohmann::json::parse(opdyn::io::read_file("cli_rates_out/mono_opinion.json"));
    CHECK(rep["pass"].get<bool>());
    CHECK(rep["fit"]["slope"].get<double>() < 0.0);
    const auto series =
        opdyn::io::parse_csv(opdyn::io::read_file("cli_rates_out/mono_opinion.csv"));
    CHECK(series.header == std::vector<std::string>({"x", "value"}));
}

TEST_CASE("advisory studies do not fail the exit status") {
    opdyn::io::write_file("cli_adv.json",
                          "{\"params\":{\"p\":2.0},"
                          "\"pi\":[[0.5,0.5],[4.0,0.5]],\"eps\":0.001}");
    CHECK(run_cli("stability cli_adv.json --out cli_adv_out") == 0);
    const auto rep = nlohmann::json::parse(
        opdyn::io::read_file("cli_adv_out/marginal_stability.json"));
    CHECK(rep["advisory"].get<bool>());
}

TEST_CASE("integration blow-up exits with status 3") {
    opdyn::io::write_file("cli_blow.json",
                          "{\"params\":{\"sigma\":1.0,\"p\":2.0},"
                          "\"sim\":{\"t_final\":2.0,\"dt\":0.5,\"snapshot_stride\":1,"
                          "\"integrator\":\"euler\"},"
                          "\"initial_measure\":[[3.0,0.5,1.0]]}");
    CHECK(run_cli("simulate cli_blow.json --out cli_blow_out") == 3);
}

TEST_CASE("verify passes on the shipped default config") {
    const std::string cfg = std::string(OPDYN_CONFIG_DIR) + "/verify.json";
    CHECK(run_cli("verify " + cfg, "cli_verify.txt") == 0);
    const auto text = opdyn::io::read_file("cli_verify.txt");
    CHECK(text.find("verify passed") != std::string::npos);
    CHECK(text.find("FAIL") == std::string::npos);
}
