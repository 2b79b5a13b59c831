#include "crucible/error.hpp"

namespace crucible {

std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::EmptyRecipe: return "EmptyRecipe";
    case Errc::FromNotFirst: return "FromNotFirst";
    case Errc::UnknownDirective: return "UnknownDirective";
    case Errc::MultipleFrom: return "MultipleFrom";
    case Errc::MissingArgument: return "MissingArgument";
    case Errc::StoreUnwritable: return "StoreUnwritable";
    case Errc::StoreCorrupt: return "StoreCorrupt";
    case Errc::StoreLocked: return "StoreLocked";
    case Errc::BaseImageUnresolvable: return "BaseImageUnresolvable";
    case Errc::AmbiguousPrefix: return "AmbiguousPrefix";
    case Errc::UnknownImage: return "UnknownImage";
    case Errc::InvalidTagName: return "InvalidTagName";
    case Errc::UnknownReference: return "UnknownReference";
    case Errc::CorruptManifest: return "CorruptManifest";
    case Errc::InvalidLaunchSpec: return "InvalidLaunchSpec";
    case Errc::UnsupportedFeature: return "UnsupportedFeature";
    case Errc::EmptyCommandForNative: return "EmptyCommandForNative";
    case Errc::SpawnFailure: return "SpawnFailure";
    case Errc::InvalidFixture: return "InvalidFixture";
    case Errc::NameTaken: return "NameTaken";
    case Errc::InvalidName: return "InvalidName";
    case Errc::ImageUnresolvable: return "ImageUnresolvable";
    case Errc::UnknownProject: return "UnknownProject";
    case Errc::AlreadyRunning: return "AlreadyRunning";
    case Errc::NotRunning: return "NotRunning";
    case Errc::NotStopped: return "NotStopped";
    case Errc::LaunchFailed: return "LaunchFailed";
    case Errc::NoFreePort: return "NoFreePort";
    case Errc::RegistryCorrupt: return "RegistryCorrupt";
    case Errc::RegistryUnwritable: return "RegistryUnwritable";
    case Errc::RegistryLocked: return "RegistryLocked";
    case Errc::UnknownImplementation: return "UnknownImplementation";
    case Errc::InvalidAbiTable: return "InvalidAbiTable";
    case Errc::InvalidManifest: return "InvalidManifest";
    case Errc::MissingLibrary: return "MissingLibrary";
    case Errc::StageDirUnwritable: return "StageDirUnwritable";
    case Errc::IncompatibleAbi: return "IncompatibleAbi";
    case Errc::UnsupportedBackend: return "UnsupportedBackend";
    case Errc::InvalidJob: return "InvalidJob";
    case Errc::InvalidCampaign: return "InvalidCampaign";
    case Errc::InvalidModel: return "InvalidModel";
    case Errc::NoTimingsFound: return "NoTimingsFound";
    case Errc::NegativeTiming: return "NegativeTiming";
    case Errc::InconsistentTiming: return "InconsistentTiming";
    case Errc::NoRecords: return "NoRecords";
    case Errc::InvalidRecords: return "InvalidRecords";
    case Errc::AllRunsFailed: return "AllRunsFailed";
    case Errc::MissingBaseline: return "MissingBaseline";
    case Errc::DegenerateBaseline: return "DegenerateBaseline";
    case Errc::InvalidThreshold: return "InvalidThreshold";
    case Errc::InconsistentSpec: return "InconsistentSpec";
    case Errc::WriteFailure: return "WriteFailure";
    case Errc::InvalidCsv: return "InvalidCsv";
    case Errc::InvalidConfig: return "InvalidConfig";
    case Errc::ReadFailure: return "ReadFailure";
  }
  return "UnknownError";
}

}  // namespace crucible
