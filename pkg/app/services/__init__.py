# Services package: counting, sieve dan sampling engines
