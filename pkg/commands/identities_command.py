from commands.base_command import EXIT_CHECK_FAILED, EXIT_OK, BaseCommand
from utils.identity_validator import IdentityValidator


class IdentitiesCommand(BaseCommand):
    name = "identities"

    def run(self) -> int:
        validator = IdentityValidator(self.config)
        results = validator.validate_all(self.seed)
        passed = validator.all_passed(results)
        self.write_output({"seed": self.seed, "passed": passed, "identities": results})
        return EXIT_OK if passed else EXIT_CHECK_FAILED
