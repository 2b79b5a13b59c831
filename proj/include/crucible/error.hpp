#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace crucible {

// Every failure the tool can report to a user. The CLI maps each of these to
// exit code 1 and a single `error: <Name>: <detail>` line.
enum class Errc {
  // image-model
  EmptyRecipe,
  FromNotFirst,
  UnknownDirective,
  MultipleFrom,
  MissingArgument,
  StoreUnwritable,
  StoreCorrupt,
  StoreLocked,
  BaseImageUnresolvable,
  AmbiguousPrefix,
  UnknownImage,
  InvalidTagName,
  UnknownReference,
  CorruptManifest,
  // launch
  InvalidLaunchSpec,
  UnsupportedFeature,
  EmptyCommandForNative,
  SpawnFailure,
  InvalidFixture,
  // workflows
  NameTaken,
  InvalidName,
  ImageUnresolvable,
  UnknownProject,
  AlreadyRunning,
  NotRunning,
  NotStopped,
  LaunchFailed,
  NoFreePort,
  RegistryCorrupt,
  RegistryUnwritable,
  RegistryLocked,
  // hpc-inject
  UnknownImplementation,
  InvalidAbiTable,
  InvalidManifest,
  MissingLibrary,
  StageDirUnwritable,
  IncompatibleAbi,
  UnsupportedBackend,
  InvalidJob,
  // bench
  InvalidCampaign,
  InvalidModel,
  NoTimingsFound,
  NegativeTiming,
  InconsistentTiming,
  NoRecords,
  InvalidRecords,
  AllRunsFailed,
  MissingBaseline,
  DegenerateBaseline,
  InvalidThreshold,
  // report
  InconsistentSpec,
  WriteFailure,
  InvalidCsv,
  // cli
  InvalidConfig,
  ReadFailure,
};

std::string_view to_string(Errc code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& detail)
      : std::runtime_error(detail), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace crucible
