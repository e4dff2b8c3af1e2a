# Models package: lab dataclasses
