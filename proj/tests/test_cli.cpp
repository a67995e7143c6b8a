#include "doctest.h"
#include "fixtures.hpp"

#include "gcnstab/cli.hpp"
#include "gcnstab/csv.hpp"
#include "gcnstab/manifest.hpp"

#include "json.hpp"

#include <cmath>
#include <filesystem>
#include <sstream>

using namespace gcnstab;
using nlohmann::json;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(const std::vector<std::string>& args) {
  std::ostringstream out;
  std::ostringstream err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    rows.push_back(cells);
  }
  return rows;
}

double num(const std::string& s) { return s.empty() ? std::nan("") : std::stod(s); }

std::string synth(const std::string& name, const std::vector<std::string>& extra) {
  const std::string dir = fixtures::scratch_dir(name);
  std::vector<std::string> args{"synth", "--out", dir};
  args.insert(args.end(), extra.begin(), extra.end());
  const Result r = run(args);
  REQUIRE_MESSAGE(r.code == 0, r.err);
  return dir;
}

}  // namespace

TEST_CASE("synth then spectra on a star") {
  const std::string dir = synth("cli_star", {"--kind", "star", "--n", "5", "--d", "4", "--seed", "1"});
  CHECK(std::filesystem::exists(dir + "/graph.tsv"));
  CHECK(std::filesystem::exists(dir + "/manifest.json"));
  const Result r = run({"spectra", "--data", dir, "--filter", "unnorm"});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  const auto rows = parse_csv(r.out);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0] == std::vector<std::string>{"kind", "lambda_max", "method", "iterations", "residual"});
  CHECK(rows[1][0] == "unnorm");
  CHECK(std::abs(num(rows[1][1]) - 3.0) <= 1e-6);
}

TEST_CASE("spectra writes a manifest with input blob ids") {
  const std::string dir = synth("cli_manifest", {"--kind", "cycle", "--n", "12"});
  const std::string out = dir + "/spectra.csv";
  const Result r = run({"spectra", "--data", dir, "--out", out});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  CHECK(r.out.empty());
  CHECK(parse_csv(fixtures::read_file(out)).size() == 4);
  const json man = json::parse(fixtures::read_file(manifest_path_for(out)));
  CHECK(man["subcommand"] == "spectra");
  CHECK(man["exit_code"] == 0);
  CHECK(man["inputs"]["blobs"]["graph.tsv"] == git_blob_id(dir + "/graph.tsv"));
  CHECK(man["outputs"][0] == out);
}

TEST_CASE("twin envelope dominates the weight gap") {
  const std::string dir = synth("cli_twin", {"--n", "100", "--seed", "3"});
  const std::string out = dir + "/twin.csv";
  const Result r = run({"twin", "--data", dir, "--filter", "symnorm", "--eta", "1", "--epochs", "100", "--seed", "7",
                        "--perturb-index", "0", "--out", out});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  const auto rows = parse_csv(fixtures::read_file(out));
  REQUIRE(rows.size() > 1);
  CHECK(rows[0] == std::vector<std::string>{"step", "branch", "delta_theta_l2", "lemma34_lhs", "lemma34_rhs",
                                            "lemma35_lhs", "lemma35_rhs", "envelope"});
  CHECK(rows.size() == 1 + 100 * 60);
  for (std::size_t k = 1; k < rows.size(); ++k) CHECK(num(rows[k][2]) <= num(rows[k][7]) + 1e-9);
  const json man = json::parse(fixtures::read_file(manifest_path_for(out)));
  CHECK(man["envelope_violations"] == 0);
}

TEST_CASE("bound reproduces the worked values") {
  const Result r = run({"bound", "--eta", "0.1", "--steps", "1", "--m", "100", "--lambda", "2", "--M", "1", "--delta",
                        "0.1", "--act", "elu", "--loss", "logistic"});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  const json j = json::parse(r.out);
  CHECK(std::abs(j["beta_m"].get<double>() - 0.001) <= 1e-12);
  CHECK(std::abs(j["gap_bound"].get<double>() - (0.002 + 1.4 * std::sqrt(std::log(10.0) / 200.0))) <= 1e-12);
  CHECK(j["T"] == 1);
  CHECK(j["m"] == 100);
  CHECK(j["constants"]["nu_ell"] == 0.25);
  CHECK(j["vacuous"] == false);

  const std::string dir = synth("cli_bound", {"--n", "200", "--seed", "2"});
  const Result d = run({"bound", "--data", dir, "--filter", "symnorm", "--eta", "0.1", "--steps", "1", "--m", "100",
                        "--lambda", "2", "--M", "1", "--delta", "0.1"});
  REQUIRE_MESSAGE(d.code == 0, d.err);
  CHECK(std::abs(json::parse(d.out)["beta_m"].get<double>() - 0.001) <= 1e-12);

  const Result e = run({"bound", "--data", dir, "--filter", "symnorm", "--eta", "0.1", "--epochs", "1"});
  REQUIRE_MESSAGE(e.code == 0, e.err);
  const json je = json::parse(e.out);
  CHECK(je["T"] == 120);
  CHECK(je["lambda_source"] == "g_lambda");
  CHECK(je["g_lambda"].get<double>() <= je["lambda_max"].get<double>() + 1e-9);
  CHECK(je["M"].get<double>() > 0.0);
}

TEST_CASE("train gap and stability run end to end") {
  const std::string dir = synth("cli_e2e", {"--n", "60", "--p", "0.1", "--seed", "5"});
  const Result t = run({"train", "--data", dir, "--epochs", "3", "--eta", "0.1"});
  REQUIRE_MESSAGE(t.code == 0, t.err);
  CHECK(parse_csv(t.out).size() == 5);

  const Result g = run({"gap", "--data", dir, "--epochs", "3", "--eta", "0.1"});
  REQUIRE_MESSAGE(g.code == 0, g.err);
  const auto rows = parse_csv(g.out);
  CHECK(rows[0] == std::vector<std::string>{"epoch", "train_loss", "test_loss", "gap", "train_err01", "test_err01"});
  for (std::size_t k = 1; k < rows.size(); ++k) CHECK(num(rows[k][3]) >= 0.0);

  const Result s = run({"stability", "--data", dir, "--epochs", "2", "--eta", "0.1", "--perturbations", "2", "--runs", "2"});
  REQUIRE_MESSAGE(s.code == 0, s.err);
  const json js = json::parse(s.out);
  CHECK(js["within_bound"] == true);
  CHECK(js["P"] == 2);
  CHECK(js["R"] == 2);

  const Result i = run({"interlace", "--data", dir, "--filter", "rw"});
  REQUIRE_MESSAGE(i.code == 0, i.err);
  CHECK(parse_csv(i.out).size() == 61);
}

TEST_CASE("outputs are byte-identical across repeated runs") {
  const std::string dir = synth("cli_repro", {"--n", "50", "--p", "0.1", "--seed", "9"});
  for (const std::string cmd : {"train", "twin", "gap"}) {
    const std::vector<std::string> args{cmd, "--data", dir, "--epochs", "4", "--seed", "3", "--mode", "uniform", "--init", "uniform"};
    const Result a = run(args);
    const Result b = run(args);
    REQUIRE_MESSAGE(a.code == 0, a.err);
    CHECK(a.out == b.out);
  }
  const std::string a = synth("cli_repro_a", {"--n", "30", "--seed", "4"});
  const std::string b = synth("cli_repro_b", {"--n", "30", "--seed", "4"});
  for (const char* f : {"graph.tsv", "features.csv", "labels.csv", "split.json"}) {
    CHECK(fixtures::read_file(a + "/" + f) == fixtures::read_file(b + "/" + f));
  }
}

TEST_CASE("divergence writes nan rows and exits with 2") {
  const std::string dir = fixtures::scratch_dir("cli_diverge");
  fixtures::write_file(dir + "/graph.tsv", "3\t2\n0\t1\n1\t2\n");
  fixtures::write_file(dir + "/features.csv", "1e300\n-1e300\n1e300\n");
  fixtures::write_file(dir + "/labels.csv", "1\n-1\n1\n");
  fixtures::write_file(dir + "/split.json", "{\"train\":[0,1],\"test\":[2]}\n");
  const std::string out = dir + "/train.csv";
  const Result r = run({"train", "--data", dir, "--filter", "unnorm", "--normalize", "off", "--eta", "1e300",
                        "--epochs", "5", "--out", out});
  CHECK(r.code == cli::kExitDiverged);
  CHECK(r.err.find("divergence") != std::string::npos);
  const std::string body = fixtures::read_file(out);
  CHECK(body.find("nan") != std::string::npos);
  const json man = json::parse(fixtures::read_file(manifest_path_for(out)));
  CHECK(man["exit_code"] == 2);
  CHECK(man["diverged"] == true);
}

TEST_CASE("validation errors exit with 1") {
  CHECK(run({}).code == cli::kExitInvalid);
  CHECK(run({"nonsense"}).code == cli::kExitInvalid);
  CHECK(run({"spectra"}).code == cli::kExitInvalid);
  CHECK(run({"spectra", "--data", "/nonexistent/dir"}).code == cli::kExitInvalid);
  const std::string dir = synth("cli_invalid", {"--n", "20", "--p", "0.3"});
  CHECK(run({"train", "--data", dir, "--act", "relu"}).code == cli::kExitInvalid);
  CHECK(run({"train", "--data", dir, "--eta", "-1"}).code == cli::kExitInvalid);
  CHECK(run({"train", "--data", dir, "--m", "1000"}).code == cli::kExitInvalid);
  CHECK(run({"bound", "--lambda", "2"}).code == cli::kExitInvalid);
  CHECK(run({"synth", "--out", dir + "/x", "--kind", "grid"}).code == cli::kExitInvalid);
  CHECK(run({"spectra", "--data", dir, "--bogus-flag"}).code == cli::kExitInvalid);
  CHECK(run({"--help"}).code == cli::kExitOk);
}

TEST_CASE("csv emission") {
  const std::string dir = fixtures::scratch_dir("csv");
  const std::string path = dir + "/empty.csv";
  const CsvStats s = emit_csv({}, {"a", "b"}, path);
  CHECK(s.rows == 0);
  CHECK(fixtures::read_file(path) == "a,b\n");

  std::ostringstream out;
  const CsvStats t = write_csv(out, {{std::int64_t{1}, 0.1, std::string("x")}, {std::int64_t{2}, std::nan(""), std::monostate{}}},
                               {"i", "v", "s"});
  CHECK(out.str() == "i,v,s\n1,0.10000000000000001,x\n2,nan,\n");
  CHECK(t.had_nan);
  CHECK(t.rows == 2);

  try {
    write_csv(out, {{std::int64_t{1}}}, {"i", "v"});
    FAIL("expected a schema error");
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()).find("'v'") != std::string::npos);
  }
  try {
    write_csv(out, {{std::int64_t{1}, 2.0, 3.0}}, {"i", "v"});
    FAIL("expected a schema error");
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()).find("'v'") != std::string::npos);
  }
  CHECK_THROWS(emit_csv({}, {"a"}, "/nonexistent/dir/file.csv"));
}

TEST_CASE("git blob ids match git") {
  const std::string dir = fixtures::scratch_dir("blob");
  fixtures::write_file(dir + "/hello.txt", "hello\n");
  CHECK(git_blob_id(dir + "/hello.txt") == "ce013625030ba8dba906f756967f9e9ca394464a");
  fixtures::write_file(dir + "/empty.txt", "");
  CHECK(git_blob_id(dir + "/empty.txt") == "e69de29bb2d1d6434b8b29ae775ad8c2e48c5391");
}
